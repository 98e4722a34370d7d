"""
noma-tradeoff - SE-EE trade-off beamforming for downlink MISO-NOMA.

This package provides:
- A conic interior-point solver (orthant, second-order and PSD cones)
- SCA designs for the weighted SE-EE trade-off and its baselines
  (power minimization, SE-Max, Dinkelbach GEE-Max)
- A semidefinite-relaxation power benchmark
- An experiment suite writing CSV results

Example:
    >>> from noma_tradeoff.controllers import TradeoffController
    >>> from noma_tradeoff.utils import generate_channels
    >>>
    >>> cs = generate_channels(seed=0, distances=[1, 2, 3], path_loss_exp=1, num_antennas=3)
    >>> solution, trace = TradeoffController().solve_tradeoff(cs, params, alpha=0.5)
"""

__version__ = "0.1.0"

from . import config, controllers, exceptions, models, utils

__all__ = [
    "config",
    "controllers",
    "exceptions",
    "models",
    "utils",
    "__version__",
]
