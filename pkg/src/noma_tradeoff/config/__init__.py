"""Configuration module for noma-tradeoff."""

from .experiment import (
    ExperimentConfig,
    SolverBlock,
    SweepBlock,
    SystemBlock,
    load_experiment_config,
)
from .settings import NomaSettings, get_settings, reload_settings

__all__ = [
    "ExperimentConfig",
    "NomaSettings",
    "SolverBlock",
    "SweepBlock",
    "SystemBlock",
    "get_settings",
    "load_experiment_config",
    "reload_settings",
]
