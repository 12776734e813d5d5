"""Exception hierarchy shared across the library.

The CLI maps these onto exit codes: config problems exit 1, numerical
conditioning failures exit 2, verification-suite failures exit 3.
"""


class TchgueError(Exception):
    """Base class for all library errors."""


class DomainError(TchgueError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class UnsupportedOrderError(DomainError):
    """Bessel order beyond the supported integer range."""


class IntegrationFailureError(TchgueError):
    """Half-line quadrature failed to converge; carries the partial value."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class IllConditionedSpectrumError(TchgueError):
    """Residue summation cancelled too strongly to be trusted in doubles."""

    def __init__(self, message, value=None, cancellation=None):
        super().__init__(message)
        self.value = value
        self.cancellation = cancellation


class GeometryError(TchgueError):
    """No admissible quadrature contour exists for the requested points."""


class ConditioningError(TchgueError):
    """A determinant evaluation is too ill-conditioned to return silently."""


class PhaseError(TchgueError):
    """Operation requires the chirally broken phase (xi > 0)."""


class ConfigError(TchgueError):
    """Invalid run configuration; message aggregates all violations."""
