"""Semantic exception hierarchy.

Every error raised on purpose by this package derives from SteinChaosError,
so callers can distinguish contract violations from genuine bugs.
"""

from __future__ import annotations


class SteinChaosError(Exception):
    """Base class for all deliberate errors raised by steinchaos."""


class DomainError(SteinChaosError, ValueError):
    """An input value lies outside the mathematical domain of an operation."""


class ValidationError(SteinChaosError, ValueError):
    """Structured input (model, density, functional) fails a consistency check."""


class CapacityError(SteinChaosError, ValueError):
    """A configured cap (order, basis size, node count) would be exceeded."""


class CapabilityError(SteinChaosError, NotImplementedError):
    """The operation is not defined for the given kind."""


class PreconditionError(SteinChaosError, ValueError):
    """A documented precondition of the operation does not hold."""


class AccuracyError(SteinChaosError, ArithmeticError):
    """A quadrature or iteration failed to reach the requested tolerance."""


class BoundAssertionError(SteinChaosError, AssertionError):
    """Assert-mode comparison failed: the empirical value exceeds the bound.

    Carries the offending report so callers (and the CLI) can surface both
    numbers instead of a bare failure.
    """

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report
