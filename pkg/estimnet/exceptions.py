"""
Exceptions
Error types raised by the graph store, estimators and file parsers
"""
from typing import Optional


class EstimNetError(Exception):
    """Base class for all EstimNet errors."""


class PreconditionError(EstimNetError, ValueError):
    """Operation called on a graph state that violates its precondition."""


class ConfigurationError(EstimNetError, ValueError):
    """Invalid model specification or algorithm configuration."""


class InputFormatError(EstimNetError, ValueError):
    """Malformed input file."""

    def __init__(self, message: str, path: Optional[str] = None, line_number: Optional[int] = None):
        self.path = path
        self.line_number = line_number
        location = ""
        if path is not None:
            location = f"{path}"
        if line_number is not None:
            location = f"{location}:{line_number}" if location else f"line {line_number}"
        super().__init__(f"{location}: {message}" if location else message)


class InsufficientSamplesError(EstimNetError, ValueError):
    """Too few samples for batch means estimation."""


class SingularCovarianceError(EstimNetError, ArithmeticError):
    """Covariance matrix is (nearly) computationally singular."""


class DivergenceError(EstimNetError, ArithmeticError):
    """Parameter values became non-finite or huge."""


class EstimationFailedError(EstimNetError, RuntimeError):
    """No converged estimate available."""


class InternalInvariantError(EstimNetError, AssertionError):
    """Graph or two-path table state is inconsistent."""
