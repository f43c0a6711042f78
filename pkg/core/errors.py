"""
Exception types for SourceChecker.

Every error carries the process exit code the command line runner returns
when the error reaches the top level.
"""

from typing import Optional, Sequence


class LabError(Exception):
    """Base class for all SourceChecker failures."""

    exit_code = 2


class ConfigValidationError(LabError):
    """A parameter or configuration invariant is violated."""

    exit_code = 1


class CFLViolationError(ConfigValidationError):
    """Time step too large for the selected scheme."""


class DomainGuardError(ConfigValidationError):
    """Truncated domain too small for the requested final time."""


class NumericalError(LabError):
    """A numerical procedure failed."""

    exit_code = 2


class QuadratureError(NumericalError):
    """Adaptive quadrature did not converge within its refinement budget."""

    def __init__(self, message: str, estimates: Sequence[float] = ()):
        super().__init__(message)
        self.estimates = tuple(estimates)


class DomainViolationError(NumericalError):
    """Argument of a logarithm or a denominator left its admissible range."""


class NonFiniteFieldError(NumericalError):
    """A field picked up NaN or infinite values."""

    def __init__(self, message: str, index: Optional[int] = None):
        super().__init__(message)
        self.index = index


class BoundaryContaminationError(NumericalError):
    """The solution reached the outer part of the truncated domain."""


class SmallAmplitudeError(NumericalError):
    """Initial data outside the small-amplitude regime."""


class IllConditionedError(NumericalError):
    """The implicit equation for the phase velocity is ill-conditioned."""


class VerificationError(NumericalError):
    """A verification check could not be evaluated."""


class ToleranceViolation(LabError):
    """A result exceeded its declared tolerance."""

    exit_code = 3
