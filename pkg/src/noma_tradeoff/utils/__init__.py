"""Numerical helpers: system model, cone algebra, envelopes and program building."""

from .cone_builder import Affine, ConeProgramBuilder, VariableBlock
from .envelope import envelope_inverse, envelope_value, secant_lines
from .system_model import evaluate, generate_channels, order_users

__all__ = [
    "Affine",
    "ConeProgramBuilder",
    "VariableBlock",
    "envelope_inverse",
    "envelope_value",
    "evaluate",
    "generate_channels",
    "order_users",
    "secant_lines",
]
