"""Exception types shared across the package."""


class MopeError(Exception):
    """Base class for all package errors."""


class ParameterError(MopeError, ValueError):
    """A family, path or configuration parameter is outside its domain."""


class DomainError(MopeError, ValueError):
    """A point lies outside the support of a measure."""


class ConfluenceError(MopeError, ValueError):
    """Two poles of a symbol coincide (confluent symbols are not supported)."""


class WindowExhaustedError(MopeError, IndexError):
    """An operation needs matrix rows or Laurent coefficients that are not available."""


class ContourError(MopeError, ValueError):
    """The quadrature contour does not enclose all singularities."""


class CertificationError(MopeError, ArithmeticError):
    """A numerical certificate (aliasing, tail, residual) failed."""


class HypothesisViolatedError(MopeError, ValueError):
    """The column-localisation hypothesis of a BCH trace identity does not hold."""


class NonNormalIndexError(MopeError, ArithmeticError):
    """The orthogonality system for a multi-index is singular."""

    def __init__(self, k):
        super().__init__(f"multi-index {tuple(int(x) for x in k)} is not normal")
        self.k = tuple(int(x) for x in k)


class InvalidEnsembleError(MopeError, ValueError):
    """An enumerated ensemble has a negative configuration probability."""


class EnsembleSizeError(MopeError, ValueError):
    """Exact enumeration would visit too many configurations."""
