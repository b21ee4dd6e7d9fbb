"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class ThzChanError(Exception):
    """Base class for all toolkit errors."""


class DomainError(ThzChanError, ValueError):
    """An argument lies outside the domain of a formula (e.g. d <= 0)."""


class IdentifiabilityError(ThzChanError, ValueError):
    """The requested fit has a rank-deficient design."""

    def __init__(self, parameter: str, message: str):
        super().__init__(message)
        self.parameter = parameter


class DataError(ThzChanError, ValueError):
    """Malformed or inconsistent measurement data."""


class NumericalError(ThzChanError, ArithmeticError):
    """A numerical routine failed to reach its accuracy target."""


class QuadratureError(NumericalError):
    """Adaptive quadrature did not converge within its subdivision budget.

    Carries the best available estimate so callers can decide whether it is
    good enough.
    """

    def __init__(self, message: str, best_estimate: complex, achieved_tolerance: float):
        super().__init__(message)
        self.best_estimate = best_estimate
        self.achieved_tolerance = achieved_tolerance


class AccuracyLossError(NumericalError):
    """Analytic evaluation lost too much precision; use the quadrature path."""

    def __init__(self, message: str, estimated_error: float = float("inf")):
        super().__init__(message)
        self.estimated_error = estimated_error
