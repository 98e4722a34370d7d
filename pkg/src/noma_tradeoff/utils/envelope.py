"""Secant upper envelope of 2^rho on a uniform grid."""

import numpy as np

from ..exceptions import ValidationError


def validate_range(rho_lo: float, rho_hi: float, pieces: int) -> None:
    if not rho_hi > rho_lo:
        raise ValidationError(
            "Envelope range must satisfy rho_lo < rho_hi",
            details={"rho_lo": rho_lo, "rho_hi": rho_hi},
        )
    if pieces < 1:
        raise ValidationError(
            "Envelope needs at least one piece", details={"pieces": pieces}
        )


def envelope_nodes(rho_lo: float, rho_hi: float, pieces: int) -> np.ndarray:
    validate_range(rho_lo, rho_hi, pieces)
    return np.linspace(rho_lo, rho_hi, pieces + 1)


def secant_lines(
    rho_lo: float, rho_hi: float, pieces: int
) -> tuple[np.ndarray, np.ndarray]:
    """
    Slopes and intercepts of the secants of 2^rho.

    The constraint z >= slope_m * rho + intercept_m for every m, together with
    rho in [rho_lo, rho_hi], is an inner approximation of z >= 2^rho.
    """
    nodes = envelope_nodes(rho_lo, rho_hi, pieces)
    values = np.exp2(nodes)
    slopes = np.diff(values) / np.diff(nodes)
    intercepts = values[:-1] - slopes * nodes[:-1]
    return slopes, intercepts


def envelope_value(
    rho: float | np.ndarray, rho_lo: float, rho_hi: float, pieces: int
) -> np.ndarray:
    """Piecewise-linear interpolant of 2^rho (the envelope) at ``rho``."""
    nodes = envelope_nodes(rho_lo, rho_hi, pieces)
    return np.interp(rho, nodes, np.exp2(nodes))


def envelope_inverse(
    z: float | np.ndarray, rho_lo: float, rho_hi: float, pieces: int
) -> np.ndarray:
    """Largest rho in [rho_lo, rho_hi] whose envelope value does not exceed ``z``."""
    nodes = envelope_nodes(rho_lo, rho_hi, pieces)
    return np.interp(z, np.exp2(nodes), nodes)


def default_rho_max(p_ava: float, max_gain: float, min_noise: float) -> float:
    """Upper bound on any per-user rate: log2(1 + P_ava max|h|^2 / min sigma^2) + 1."""
    return float(np.log2(1.0 + p_ava * max_gain / min_noise) + 1.0)
