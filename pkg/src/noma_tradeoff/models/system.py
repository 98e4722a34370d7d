"""Data models for the downlink MISO-NOMA system."""

from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_serializer, model_validator


class SystemParams(BaseModel):
    """
    Power budget, hardware and rate-target parameters of one cell.

    Per-user lists follow the indexing of the ChannelSet they are used with
    (user 0 is the strongest once channels are ordered).

    Example:
        >>> params = SystemParams(
        ...     num_antennas=3,
        ...     num_users=2,
        ...     p_ava=10.0,
        ...     noise_vars=[1.0, 1.0],
        ...     rate_thresholds=[0.1, 0.1],
        ... )
        >>> params.sinr_thresholds
    """

    num_antennas: int = Field(..., description="Transmit antennas N", ge=1)
    num_users: int = Field(..., description="Users K", ge=1)
    p_ava: float = Field(..., description="Available transmit power in watts", gt=0.0)
    noise_vars: list[float] = Field(..., description="Noise variance per user in watts")
    eps0: float = Field(default=0.65, description="Amplifier efficiency", gt=0.0, le=1.0)
    p_loss: float = Field(default=10.0, description="Circuit losses in watts", ge=0.0)
    bandwidth: float = Field(default=1.0, description="Bandwidth in hertz", gt=0.0)
    rate_thresholds: list[float] = Field(
        ..., description="Minimum rate per user in bits/s/Hz"
    )

    @model_validator(mode="after")
    def validate_per_user_lengths(self) -> "SystemParams":
        """Validate that per-user lists match the user count."""
        if len(self.noise_vars) != self.num_users:
            raise ValueError("noise_vars must have one entry per user")
        if len(self.rate_thresholds) != self.num_users:
            raise ValueError("rate_thresholds must have one entry per user")
        if any(s <= 0.0 for s in self.noise_vars):
            raise ValueError("noise variances must be positive")
        if any(r < 0.0 for r in self.rate_thresholds):
            raise ValueError("rate thresholds must be non-negative")
        return self

    @classmethod
    def from_sinr_thresholds(
        cls, sinr_thresholds: list[float], **kwargs: Any
    ) -> "SystemParams":
        """Build parameters from SINR thresholds instead of rates."""
        rates = [float(np.log2(1.0 + eta)) for eta in sinr_thresholds]
        return cls(rate_thresholds=rates, **kwargs)

    @property
    def sinr_thresholds(self) -> np.ndarray:
        """SINR thresholds derived as 2^R - 1."""
        return np.exp2(np.asarray(self.rate_thresholds, dtype=float)) - 1.0

    @property
    def noise_std(self) -> np.ndarray:
        return np.sqrt(np.asarray(self.noise_vars, dtype=float))

    def with_budget(self, p_ava: float) -> "SystemParams":
        """Return a copy with another transmit power budget."""
        return self.model_copy(update={"p_ava": float(p_ava)})

    def reordered(self, permutation: list[int]) -> "SystemParams":
        """Return a copy whose per-user lists follow ``permutation``."""
        return self.model_copy(
            update={
                "noise_vars": [self.noise_vars[j] for j in permutation],
                "rate_thresholds": [self.rate_thresholds[j] for j in permutation],
            }
        )


class ChannelSet(BaseModel):
    """
    Complex channel vectors of all users.

    ``permutation[i]`` is the original index of the user stored at position
    ``i``; it is the identity until `order_users` sorts the set.
    """

    channels: np.ndarray = Field(..., description="K x N complex channel matrix")
    distances: list[float] = Field(..., description="User distances in meters")
    path_loss_exp: float = Field(default=1.0, description="Path loss exponent", ge=0.0)
    ordered: bool = Field(default=False, description="Sorted by descending norm")
    permutation: list[int] = Field(
        default_factory=list, description="Original index of each stored user"
    )

    model_config = ConfigDict(arbitrary_types_allowed=True)

    @model_validator(mode="after")
    def validate_channels(self) -> "ChannelSet":
        """Validate shapes, non-zero vectors and the ordering flag."""
        h = np.asarray(self.channels, dtype=complex)
        if h.ndim != 2:
            raise ValueError("channels must be a K x N matrix")
        if len(self.distances) != h.shape[0]:
            raise ValueError("distances must have one entry per user")
        norms = np.sum(np.abs(h) ** 2, axis=1)
        if np.any(norms == 0.0):
            raise ValueError("channel vectors must not be identically zero")
        if self.ordered and np.any(np.diff(norms) > 0.0):
            raise ValueError("ordered channel set must have non-increasing norms")
        if not self.permutation:
            self.permutation = list(range(h.shape[0]))
        if sorted(self.permutation) != list(range(h.shape[0])):
            raise ValueError("permutation must be a permutation of the users")
        self.channels = h
        return self

    @field_serializer("channels")
    def serialize_channels(self, h: np.ndarray, _info: Any) -> list[list[list[float]]]:
        return [[[float(c.real), float(c.imag)] for c in row] for row in h]

    @property
    def num_users(self) -> int:
        return int(self.channels.shape[0])

    @property
    def num_antennas(self) -> int:
        return int(self.channels.shape[1])

    @property
    def gains(self) -> np.ndarray:
        """Squared channel norms per user."""
        return np.sum(np.abs(self.channels) ** 2, axis=1)


class SicViolation(BaseModel):
    """One violated SIC ordering pair."""

    receiver: int = Field(..., description="Receiving user i")
    user: int = Field(..., description="Lower index j of the violated pair (j, j+1)")
    margin: float = Field(..., description="|h_i^H w_{j+1}|^2 - |h_i^H w_j|^2")


class SicReport(BaseModel):
    """Result of an SIC ordering check."""

    satisfied: bool = Field(..., description="True when no pair is violated")
    violations: list[SicViolation] = Field(default_factory=list)

    def __bool__(self) -> bool:
        return self.satisfied


class BeamformerSolution(BaseModel):
    """
    Beamformers together with the metrics they achieve.

    All metrics are recomputed from ``beamformers`` by the system model, never
    copied from optimizer slacks.
    """

    beamformers: np.ndarray = Field(..., description="K x N complex beamformers")
    per_user_rates: list[float] = Field(..., description="Achievable rates in bits/s/Hz")
    sum_rate: float = Field(..., description="B_w times the spectral efficiency")
    se: float = Field(..., description="Spectral efficiency in bits/s/Hz")
    gee: float = Field(..., description="Energy efficiency in bits/joule")
    tx_power: float = Field(..., description="Transmit power in watts")

    model_config = ConfigDict(arbitrary_types_allowed=True)

    @field_serializer("beamformers")
    def serialize_beamformers(
        self, w: np.ndarray, _info: Any
    ) -> list[list[list[float]]]:
        return [[[float(c.real), float(c.imag)] for c in row] for row in w]
