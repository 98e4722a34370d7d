"""
Custom exceptions for the NOMA trade-off package.

This module defines the exception hierarchy shared by the system model,
the conic solver, the SCA engine, the baselines and the experiment runner.
"""

from typing import Any


class NomaTradeoffError(Exception):
    """Base exception for all noma-tradeoff errors."""

    def __init__(self, message: str, details: dict[str, Any] | None = None) -> None:
        """
        Initialize the base exception.

        Args:
            message: Human-readable error message
            details: Optional dictionary containing additional error context
        """
        self.message = message
        self.details = details or {}
        super().__init__(self.message)

    def __str__(self) -> str:
        if self.details:
            return f"{self.message} | Details: {self.details}"
        return self.message


class ConfigurationError(NomaTradeoffError):
    """Raised when settings or an experiment file are invalid."""

    pass


class ValidationError(NomaTradeoffError):
    """Raised when an operation receives an invalid parameter."""

    pass


class ContractViolationError(NomaTradeoffError):
    """Raised when an operation is called outside its precondition."""

    pass


class SolverError(NomaTradeoffError):
    """Raised when the conic solver cannot produce a usable answer."""

    pass


class NumericalFailureError(SolverError):
    """Raised when factorization breaks down or an iteration loses feasibility."""

    pass


class IterationLimitError(SolverError):
    """Raised when an outer loop exhausts its iteration budget."""

    pass


class InfeasibleError(NomaTradeoffError):
    """Raised when the rate targets cannot be met within the power budget."""

    pass


class GuardError(NomaTradeoffError):
    """Raised when a linearization point is too close to a singularity."""

    pass


class BenchmarkError(NomaTradeoffError):
    """Raised when the semidefinite benchmark cannot certify a solution."""

    pass


class RankFailureError(BenchmarkError):
    """Raised when a relaxed solution is not rank-one."""

    pass
