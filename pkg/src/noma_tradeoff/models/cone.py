"""Data models for conic programs and solver reports."""

from enum import Enum
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class ConeKind(str, Enum):
    """Cones understood by the interior-point solver."""

    NONNEG = "nonneg"
    SECOND_ORDER = "second_order"
    PSD = "psd"


class ConeBlock(BaseModel):
    """
    One cone covering a contiguous slice of the conic slack vector.

    For PSD blocks ``dim`` is the svec length order * (order + 1) / 2.
    """

    kind: ConeKind = Field(..., description="Cone type")
    dim: int = Field(..., description="Number of slack entries in the block", ge=1)
    order: int | None = Field(None, description="Matrix order of a PSD block")

    @model_validator(mode="after")
    def validate_dimensions(self) -> "ConeBlock":
        """Validate PSD orders and SOC sizes."""
        if self.kind == ConeKind.PSD:
            if self.order is None or self.order * (self.order + 1) // 2 != self.dim:
                raise ValueError("PSD block dim must equal order * (order + 1) / 2")
        elif self.order is not None:
            raise ValueError("order is only meaningful for PSD blocks")
        return self

    @property
    def degree(self) -> int:
        if self.kind == ConeKind.NONNEG:
            return self.dim
        if self.kind == ConeKind.SECOND_ORDER:
            return 1
        assert self.order is not None
        return self.order


class ConeProgram(BaseModel):
    """
    Conic program: maximize c^T x subject to G x + s = h, s in K, A x = b.

    Rows of G are partitioned by ``cones`` in order; a nonnegative row reads
    g^T x <= h. ``variable_names`` maps block names to index ranges and is
    informational.
    """

    c: np.ndarray = Field(..., description="Objective vector (maximized)")
    G: np.ndarray = Field(..., description="Conic constraint matrix")
    h: np.ndarray = Field(..., description="Conic right-hand side")
    A: np.ndarray = Field(..., description="Equality constraint matrix")
    b: np.ndarray = Field(..., description="Equality right-hand side")
    cones: list[ConeBlock] = Field(default_factory=list)
    variable_names: dict[str, tuple[int, int]] = Field(default_factory=dict)

    model_config = ConfigDict(arbitrary_types_allowed=True)

    @model_validator(mode="after")
    def validate_shapes(self) -> "ConeProgram":
        """Validate that matrices, vectors and the cone list agree."""
        n = int(np.asarray(self.c).shape[0])
        self.c = np.asarray(self.c, dtype=float)
        self.G = np.asarray(self.G, dtype=float).reshape(-1, n)
        self.h = np.asarray(self.h, dtype=float).reshape(-1)
        self.A = np.asarray(self.A, dtype=float).reshape(-1, n)
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        if self.G.shape[0] != self.h.shape[0]:
            raise ValueError("G and h row counts differ")
        if self.A.shape[0] != self.b.shape[0]:
            raise ValueError("A and b row counts differ")
        if sum(cone.dim for cone in self.cones) != self.G.shape[0]:
            raise ValueError("cone blocks must cover every row of G exactly")
        return self

    @property
    def num_variables(self) -> int:
        return int(self.c.shape[0])

    @property
    def num_conic_rows(self) -> int:
        return int(self.G.shape[0])

    @property
    def num_equalities(self) -> int:
        return int(self.A.shape[0])

    def cone_slices(self) -> list[tuple[ConeBlock, slice]]:
        """Pair each cone block with its row slice."""
        out = []
        start = 0
        for cone in self.cones:
            out.append((cone, slice(start, start + cone.dim)))
            start += cone.dim
        return out

    def count_cones(self, kind: ConeKind) -> int:
        return sum(1 for cone in self.cones if cone.kind == kind)

    def count_rows(self, kind: ConeKind) -> int:
        return sum(cone.dim for cone in self.cones if cone.kind == kind)

    def variable(self, x: np.ndarray, name: str) -> np.ndarray:
        """Extract a named variable block from a primal vector."""
        start, stop = self.variable_names[name]
        return np.asarray(x)[start:stop]


class SolveStatus(str, Enum):
    """Termination status of the conic solver."""

    OPTIMAL = "optimal"
    PRIMAL_INFEASIBLE = "primal_infeasible"
    DUAL_INFEASIBLE = "dual_infeasible"
    ITER_LIMIT = "iter_limit"
    NUMERICAL_FAILURE = "numerical_failure"


class SolveReport(BaseModel):
    """
    Outcome of one conic solve.

    For infeasible statuses ``x`` (dual infeasible) or ``y``/``z`` (primal
    infeasible) hold the normalized certificate instead of an iterate.
    """

    status: SolveStatus = Field(..., description="Termination status")
    x: np.ndarray = Field(..., description="Primal vector")
    y: np.ndarray = Field(..., description="Equality multipliers")
    z: np.ndarray = Field(..., description="Conic multipliers")
    s: np.ndarray = Field(..., description="Conic slacks")
    objective: float = Field(..., description="Primal objective, maximization form")
    dual_objective: float = Field(..., description="Dual objective, maximization form")
    iterations: int = Field(..., description="Interior-point iterations")
    primal_residual: float = Field(..., description="Relative primal residual")
    dual_residual: float = Field(..., description="Relative dual residual")
    gap: float = Field(..., description="Relative duality gap")

    model_config = ConfigDict(arbitrary_types_allowed=True)

    @property
    def is_optimal(self) -> bool:
        return self.status == SolveStatus.OPTIMAL

    def within(self, tol: float) -> bool:
        """True for optimal reports and for stalled ones whose residuals meet ``tol``."""
        if self.is_optimal:
            return True
        if self.status in (SolveStatus.ITER_LIMIT, SolveStatus.NUMERICAL_FAILURE):
            return max(self.primal_residual, self.dual_residual, self.gap) <= tol
        return False

    def summary(self) -> dict[str, Any]:
        """Compact dictionary used in iteration traces and logs."""
        return {
            "status": self.status.value,
            "iterations": self.iterations,
            "objective": self.objective,
            "primal_residual": self.primal_residual,
            "dual_residual": self.dual_residual,
            "gap": self.gap,
        }
