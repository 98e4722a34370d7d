"""Data models for the semidefinite-relaxation benchmark."""

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .cone import ConeProgram, SolveStatus
from .system import ChannelSet


class SdpProgram(BaseModel):
    """
    Power-minimization relaxation over K Hermitian PSD matrices.

    Each W_i is carried through its real 2N x 2N embedding; ``program`` is
    the assembled conic program and ``sinr_targets`` are 2^R - 1.
    """

    channels: ChannelSet = Field(..., description="Ordered channels")
    noise_vars: list[float] = Field(..., description="Noise variance per user")
    target_rates: list[float] = Field(..., description="Target rate per user")
    sinr_targets: list[float] = Field(..., description="Target SINR per user")
    program: ConeProgram = Field(..., description="Embedded conic program")
    num_sinr_rows: int = Field(..., description="K(K+1)/2 SINR rows")
    num_order_rows: int = Field(..., description="K(K-1) SIC ordering rows")

    model_config = ConfigDict(arbitrary_types_allowed=True)

    @property
    def num_users(self) -> int:
        return self.channels.num_users

    @property
    def num_antennas(self) -> int:
        return self.channels.num_antennas


class SdpReport(BaseModel):
    """Outcome of a relaxation solve."""

    status: SolveStatus = Field(..., description="Solver status")
    p_star: float = Field(..., description="Relaxation optimum in watts")
    matrices: np.ndarray = Field(..., description="K x N x N Hermitian solutions")
    rank_ratios: list[float] = Field(..., description="lambda2 / lambda1 per user")
    beamformers: np.ndarray | None = Field(
        None, description="Principal-eigenvector beamformers, K x N"
    )
    gap: float = Field(default=0.0, description="Relative duality gap")
    iterations: int = Field(default=0, description="Interior-point iterations")

    model_config = ConfigDict(arbitrary_types_allowed=True)

    @property
    def is_optimal(self) -> bool:
        return self.status == SolveStatus.OPTIMAL

    def rank_one(self, threshold: float = 1e-4) -> bool:
        return all(r <= threshold for r in self.rank_ratios)
