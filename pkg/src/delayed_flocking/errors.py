"""Exception hierarchy shared by the simulator, checks and CLI."""

from __future__ import annotations


class FlockingError(Exception):
    """Base exception for all delayed-flocking failures."""


class ConfigurationError(FlockingError):
    """Raised when a scenario, integrator or certificate configuration is invalid."""


class IntegratorConfigError(ConfigurationError):
    """Raised when the step size violates the method-of-steps constraint."""


class DomainError(FlockingError, ValueError):
    """Raised when a numeric argument lies outside its mathematical domain."""


class StateError(FlockingError):
    """Raised for empty histories or malformed system states."""


class HistoryWindowError(FlockingError):
    """Raised when a delayed lookup falls outside the recorded history window."""


class NumericBlowUpError(FlockingError):
    """Raised when a simulated quantity becomes non-finite."""

    def __init__(self, message: str, time: float | None = None) -> None:
        super().__init__(message)
        self.time = time


class InsufficientDataError(FlockingError):
    """Raised when a series holds too few usable records for an operation."""


class UsageError(FlockingError):
    """Raised when an operation is called with inconsistent arguments."""


class PreconditionError(FlockingError):
    """Raised when a certificate step is invoked without its precondition."""


class NotCertifiableError(FlockingError):
    """Raised when the flocking condition fails on every searched alpha."""
