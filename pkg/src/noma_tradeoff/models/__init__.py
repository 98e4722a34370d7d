"""Data models for noma-tradeoff."""

from .cone import ConeBlock, ConeKind, ConeProgram, SolveReport, SolveStatus
from .experiment import (
    AlphaSweepRow,
    BenchmarkRow,
    FeasibilityResult,
    FeasibilityRow,
    GreenPower,
    ParetoRow,
    SnrSweepRow,
)
from .sca import (
    IterationRecord,
    IterationTrace,
    ObjectiveKind,
    ParetoPoint,
    SlackState,
    TradeoffConfig,
)
from .sdp import SdpProgram, SdpReport
from .system import (
    BeamformerSolution,
    ChannelSet,
    SicReport,
    SicViolation,
    SystemParams,
)

__all__ = [
    "AlphaSweepRow",
    "BeamformerSolution",
    "BenchmarkRow",
    "ChannelSet",
    "ConeBlock",
    "ConeKind",
    "ConeProgram",
    "FeasibilityResult",
    "FeasibilityRow",
    "GreenPower",
    "IterationRecord",
    "IterationTrace",
    "ObjectiveKind",
    "ParetoPoint",
    "ParetoRow",
    "SdpProgram",
    "SdpReport",
    "SicReport",
    "SicViolation",
    "SlackState",
    "SnrSweepRow",
    "SolveReport",
    "SolveStatus",
    "SystemParams",
    "TradeoffConfig",
]
