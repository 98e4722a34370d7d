"""Data models for the successive convex approximation engine."""

from enum import Enum
from pathlib import Path
from typing import Any, Literal

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field


class ObjectiveKind(str, Enum):
    """Objective of an SCA subproblem."""

    TRADEOFF = "tradeoff"
    SUM_RATE = "sum_rate"
    DINKELBACH = "dinkelbach"
    POWER_MIN = "power_min"


class SlackState(BaseModel):
    """
    One SCA iterate: beamformers plus every slack variable.

    ``a`` and ``xi`` are K x K arrays read only on and below the diagonal
    (entry [i, k] with k <= i). ``q`` holds the SIC chain epigraphs, entry
    [i, j] bounding |h_i^H w_j|^2 for j < K - 1. ``v`` bounds b^2.
    """

    w: np.ndarray = Field(..., description="K x N complex beamformers")
    rho: np.ndarray = Field(..., description="Rate slacks")
    z: np.ndarray = Field(..., description="SINR-plus-one slacks of the rate chain")
    r: np.ndarray = Field(..., description="SINR-plus-one slacks of the efficiency chain")
    a: np.ndarray = Field(..., description="Interference amplitude slacks, rate chain")
    xi: np.ndarray = Field(..., description="Interference amplitude slacks, efficiency chain")
    q: np.ndarray = Field(..., description="SIC chain epigraph slacks")
    b: float = Field(default=0.0, description="Consumed-power amplitude slack")
    v: float = Field(default=0.0, description="Upper bound of b^2")
    gamma1: float = Field(default=0.0, description="Weighted normalized SE slack")
    gamma2: float = Field(default=0.0, description="Weighted normalized EE slack")

    model_config = ConfigDict(arbitrary_types_allowed=True)

    @classmethod
    def from_beamformers(cls, w: np.ndarray) -> "SlackState":
        """State holding only beamformers; slacks are zero."""
        w = np.asarray(w, dtype=complex)
        k = w.shape[0]
        return cls(
            w=w,
            rho=np.zeros(k),
            z=np.ones(k),
            r=np.ones(k),
            a=np.zeros((k, k)),
            xi=np.zeros((k, k)),
            q=np.zeros((k, max(k - 1, 0))),
        )

    @property
    def num_users(self) -> int:
        return int(self.w.shape[0])

    @property
    def objective(self) -> float:
        return float(self.gamma1 + self.gamma2)


class TradeoffConfig(BaseModel):
    """
    Parameters of one trade-off run.

    ``f1_star`` and ``f2_star`` are the maximum SE and the maximum
    bandwidth-free GEE of the instance; they must be computed, see
    `TradeoffController.normalize`.
    """

    alpha: float = Field(default=0.5, description="Weight of the EE objective", ge=0.0, le=1.0)
    f1_star: float = Field(..., description="Maximum SE in bits/s/Hz", gt=0.0)
    f2_star: float = Field(..., description="Maximum GEE with B_w = 1", gt=0.0)
    eps: float = Field(default=1e-3, description="Termination threshold", gt=0.0)
    max_outer_iters: int = Field(default=50, description="SCA iteration budget", ge=1)
    taylor_guard: float = Field(default=1e-6, description="Minimum z - 1 and r - 1", gt=0.0)
    envelope_pieces: int = Field(default=64, description="Secant pieces", ge=1)
    surrogate: Literal["conservative", "taylor"] = Field(default="conservative")
    sic_margin: float = Field(default=1e-6, description="Relative SIC row margin", ge=0.0)
    rho_max: float | None = Field(None, description="Top of the envelope range", gt=0.0)


class IterationRecord(BaseModel):
    """Metrics of one accepted SCA iterate."""

    iter: int = Field(..., description="Iteration index, 0 is the initial point")
    objective: float = Field(..., description="Subproblem objective value")
    se: float = Field(..., description="True SE of the iterate")
    gee: float = Field(..., description="True GEE of the iterate")
    tx_power: float = Field(..., description="Transmit power in watts")
    solver_status: str = Field(..., description="Subproblem solver status")
    solver_iterations: int = Field(default=0, description="Interior-point iterations")


class IterationTrace(BaseModel):
    """Sequence of accepted SCA iterates."""

    kind: ObjectiveKind = Field(..., description="Objective of the run")
    records: list[IterationRecord] = Field(default_factory=list)
    converged: bool = Field(default=False)
    clamps: int = Field(default=0, description="Taylor-guard clamps applied")

    def append(self, record: IterationRecord) -> None:
        self.records.append(record)

    @property
    def objectives(self) -> list[float]:
        return [r.objective for r in self.records]

    @property
    def iterations(self) -> int:
        return max(len(self.records) - 1, 0)

    def is_monotone(self, slack: float = 1e-8) -> bool:
        obj = self.objectives
        return all(b >= a - slack for a, b in zip(obj, obj[1:], strict=False))

    def to_frame(self) -> pd.DataFrame:
        columns = ["iter", "objective", "se", "gee", "tx_power", "solver_status"]
        return pd.DataFrame(
            [r.model_dump(include=set(columns)) for r in self.records], columns=columns
        )

    def to_csv(self, path: str | Path) -> Path:
        """Write the trace as CSV with columns iter, objective, se, gee, tx_power, solver_status."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False, float_format="%.12g")
        return path


class ParetoPoint(BaseModel):
    """One point of a weight sweep."""

    alpha: float
    se: float = Field(default=float("nan"))
    gee: float = Field(default=float("nan"))
    tx_power: float = Field(default=float("nan"))
    dominated: bool = Field(default=False)
    status: str = Field(default="ok")
    error: str | None = Field(None)

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def as_row(self) -> dict[str, Any]:
        return self.model_dump()
