"""
Channel generation and NOMA performance metrics.

All functions are pure; beamformers are passed as a K x N complex matrix
whose row i is w_i. Users are indexed from 0 (strongest after ordering).
"""

import numpy as np

from ..exceptions import ContractViolationError, ValidationError
from ..models.system import (
    BeamformerSolution,
    ChannelSet,
    SicReport,
    SicViolation,
    SystemParams,
)

SIC_TOLERANCE = 1e-8


def dbm_to_watts(dbm: float) -> float:
    """Convert dBm to watts."""
    return float(10.0 ** ((dbm - 30.0) / 10.0))


def tx_snr_to_power(tx_snr_db: float, noise_var: float) -> float:
    """
    Convert a transmit SNR in dB into a power budget.

    Args:
        tx_snr_db: 10 log10(P_ava / sigma^2)
        noise_var: Noise variance sigma^2 in watts

    Returns:
        Power budget in watts
    """
    return float(noise_var * 10.0 ** (tx_snr_db / 10.0))


def order_users(cs: ChannelSet) -> ChannelSet:
    """
    Sort users by descending channel norm.

    Ties keep the lower original index first. The composed permutation is
    recorded so callers can map results back to the original indexing.

    Args:
        cs: Channel set in any order

    Returns:
        Ordered channel set
    """
    order = np.argsort(-cs.gains, kind="stable")
    return ChannelSet(
        channels=cs.channels[order].copy(),
        distances=[cs.distances[j] for j in order],
        path_loss_exp=cs.path_loss_exp,
        ordered=True,
        permutation=[cs.permutation[j] for j in order],
    )


def generate_channels(
    seed: int,
    distances: list[float],
    path_loss_exp: float,
    num_antennas: int,
) -> ChannelSet:
    """
    Draw Rayleigh-faded channels with distance-based path loss.

    Each h_i = d_i^(-kappa/2) g_i with g_i ~ CN(0, I_N). The set is returned
    ordered by `order_users`.

    Args:
        seed: Seed of the generator; identical seeds give identical sets
        distances: Distance of each user in meters
        path_loss_exp: Path loss exponent kappa
        num_antennas: Transmit antennas N

    Returns:
        Ordered ChannelSet

    Raises:
        ValidationError: If a distance is not positive, kappa < 0 or N < 1
    """
    if not distances:
        raise ValidationError("At least one user is required")
    if any(d <= 0.0 for d in distances):
        raise ValidationError(
            "Distances must be positive", details={"distances": list(distances)}
        )
    if path_loss_exp < 0.0:
        raise ValidationError(
            "Path loss exponent must be non-negative",
            details={"path_loss_exp": path_loss_exp},
        )
    if num_antennas < 1:
        raise ValidationError(
            "At least one antenna is required", details={"num_antennas": num_antennas}
        )

    rng = np.random.default_rng(seed)
    k = len(distances)
    g = (
        rng.standard_normal((k, num_antennas)) + 1j * rng.standard_normal((k, num_antennas))
    ) / np.sqrt(2.0)
    scale = np.asarray(distances, dtype=float) ** (-path_loss_exp / 2.0)
    cs = ChannelSet(
        channels=g * scale[:, None],
        distances=[float(d) for d in distances],
        path_loss_exp=float(path_loss_exp),
    )
    return order_users(cs)


def received_powers(w: np.ndarray, cs: ChannelSet) -> np.ndarray:
    """Matrix of |h_k^H w_j|^2 indexed [k, j]."""
    return np.abs(np.conj(cs.channels) @ np.asarray(w).T) ** 2


def sinr_decode(
    k: int, i: int, w: np.ndarray, cs: ChannelSet, params: SystemParams
) -> float:
    """
    SINR of user i's message at receiver k after SIC.

    Interference comes only from users stronger than i (j < i); weaker
    users' signals were already cancelled.

    Raises:
        ContractViolationError: If k > i
    """
    if k > i:
        raise ContractViolationError(
            "Only users at least as strong as the target decode its message",
            details={"k": k, "i": i},
        )
    powers = received_powers(w, cs)
    interference = float(np.sum(powers[k, :i]))
    return float(powers[k, i] / (interference + params.noise_vars[k]))


def achievable_rate(i: int, w: np.ndarray, cs: ChannelSet, params: SystemParams) -> float:
    """Rate of user i: the worst decoding rate over receivers k <= i."""
    return min(
        float(np.log2(1.0 + sinr_decode(k, i, w, cs, params))) for k in range(i + 1)
    )


def per_user_rates(w: np.ndarray, cs: ChannelSet, params: SystemParams) -> np.ndarray:
    powers = received_powers(w, cs)
    noise = np.asarray(params.noise_vars, dtype=float)
    rates = np.empty(cs.num_users)
    for i in range(cs.num_users):
        interference = np.sum(powers[: i + 1, :i], axis=1)
        sinr = powers[: i + 1, i] / (interference + noise[: i + 1])
        rates[i] = float(np.min(np.log2(1.0 + sinr)))
    return rates


def tx_power_of(w: np.ndarray) -> float:
    """Total transmit power sum_i ||w_i||^2."""
    return float(np.sum(np.abs(np.asarray(w)) ** 2))


def se_of(w: np.ndarray, cs: ChannelSet, params: SystemParams) -> float:
    """Spectral efficiency: the sum of achievable rates in bits/s/Hz."""
    return float(np.sum(per_user_rates(w, cs, params)))


def consumed_power(tx_power: float, params: SystemParams) -> float:
    """Total consumed power P_t / eps0 + P_l."""
    return tx_power / params.eps0 + params.p_loss


def energy_efficiency(
    se: float, tx_power: float, params: SystemParams, bandwidth: float | None = None
) -> float:
    """
    Energy efficiency B_w se / (P_t / eps0 + P_l).

    Zero when the consumed power vanishes (all-zero beamformers with P_l = 0).
    ``bandwidth`` defaults to the one in ``params``.
    """
    denominator = consumed_power(tx_power, params)
    if denominator <= 0.0:
        return 0.0
    bw = params.bandwidth if bandwidth is None else bandwidth
    return bw * se / denominator


def gee_of(w: np.ndarray, cs: ChannelSet, params: SystemParams) -> float:
    """Energy efficiency B_w sum R_i / (P_t / eps0 + P_l)."""
    return energy_efficiency(se_of(w, cs, params), tx_power_of(w), params)


def check_sic_ordering(
    w: np.ndarray, cs: ChannelSet, tolerance: float = SIC_TOLERANCE
) -> SicReport:
    """
    Check that every receiver sees non-decreasing power along the user order.

    Args:
        w: Beamformers
        cs: Ordered channel set
        tolerance: Absolute slack allowed on each pair

    Returns:
        SicReport listing every violated (receiver, j) pair
    """
    powers = received_powers(w, cs)
    violations = []
    for receiver in range(cs.num_users):
        steps = np.diff(powers[receiver])
        for j in np.flatnonzero(steps < -tolerance):
            violations.append(
                SicViolation(receiver=receiver, user=int(j), margin=float(steps[j]))
            )
    return SicReport(satisfied=not violations, violations=violations)


def evaluate(w: np.ndarray, cs: ChannelSet, params: SystemParams) -> BeamformerSolution:
    """Build a BeamformerSolution with all metrics recomputed from ``w``."""
    w = np.asarray(w, dtype=complex)
    rates = per_user_rates(w, cs, params)
    se = float(np.sum(rates))
    tx_power = tx_power_of(w)
    return BeamformerSolution(
        beamformers=w,
        per_user_rates=[float(r) for r in rates],
        sum_rate=params.bandwidth * se,
        se=se,
        gee=energy_efficiency(se, tx_power, params),
        tx_power=tx_power,
    )
