"""Row and result models of the experiment suite."""

from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .system import BeamformerSolution

NAN = float("nan")


class FeasibilityResult(BaseModel):
    """Outcome of the power-minimization feasibility gate."""

    feasible: bool = Field(..., description="P* <= P_ava")
    p_star: float = Field(..., description="Minimum transmit power in watts")
    p_ava: float = Field(..., description="Available power in watts")
    solution: BeamformerSolution | None = Field(None)

    model_config = ConfigDict(arbitrary_types_allowed=True)

    def __bool__(self) -> bool:
        return self.feasible


class GreenPower(BaseModel):
    """Green power found on a budget grid."""

    power_w: float = Field(..., description="Smallest saturated budget, or the grid top")
    saturated: bool = Field(..., description="False when the grid never saturates")
    tx_power_w: float = Field(default=NAN, description="GEE-Max transmit power at power_w")
    gee: float = Field(default=NAN, description="GEE-Max value at power_w")


class SweepRow(BaseModel):
    """Base class of CSV rows; ``status`` is ``ok`` or an error tag."""

    seed: int
    status: str = Field(default="ok")

    def as_row(self) -> dict[str, Any]:
        return self.model_dump()


class AlphaSweepRow(SweepRow):
    tx_snr_db: float
    alpha: float
    se: float = NAN
    sum_rate_bps: float = NAN
    gee: float = NAN
    tx_power_w: float = NAN
    iters: int = 0


class SnrSweepRow(AlphaSweepRow):
    green_power_w: float = NAN
    saturated: bool = False


class BenchmarkRow(SweepRow):
    tx_snr_db: float
    alpha: float
    eta_th: float
    rates: str = ""
    sca_power_w: float = NAN
    sdr_power_w: float = NAN
    gap: float = NAN
    max_rank_ratio: float = NAN


class FeasibilityRow(SweepRow):
    tx_snr_db: float
    eta_th: float
    p_star_w: float = NAN
    p_ava_w: float = NAN
    feasible: bool = False


class ParetoRow(SweepRow):
    alpha: float
    se: float = NAN
    gee: float = NAN
    tx_power_w: float = NAN
    dominated: bool = False


def format_rates(rates: np.ndarray | list[float]) -> str:
    """Semicolon-separated rate list for a single CSV cell."""
    return ";".join(f"{float(r):.9g}" for r in rates)
