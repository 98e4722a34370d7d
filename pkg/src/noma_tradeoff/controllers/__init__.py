"""Controllers for the conic solver, the SCA designs, the benchmark and the experiments."""

from .baselines import BaselineController
from .benchmark_sdp import SdpBenchmarkController
from .conic_solver import ConicSolver, add_exp_upper_envelope, dump_matrix_market
from .experiments import ExperimentRunner
from .sca_engine import TradeoffController, verify_solution
from .sca_kernel import ScaContext, ScaKernel, subproblem_dimensions

__all__ = [
    "BaselineController",
    "ConicSolver",
    "ExperimentRunner",
    "ScaContext",
    "ScaKernel",
    "SdpBenchmarkController",
    "TradeoffController",
    "add_exp_upper_envelope",
    "dump_matrix_market",
    "subproblem_dimensions",
    "verify_solution",
]
