"""Exception types shared across the package."""


class JumpRatioError(Exception):
    """Base class for all package errors."""


class DomainError(JumpRatioError, ValueError):
    """Argument outside the domain of an operation."""


class UnsupportedOperation(JumpRatioError):
    """Operation not defined for this model (e.g. a non-Levy measure)."""


class RegimeUnknownError(JumpRatioError):
    """The model carries no declared regime for the requested theorem."""


class TruncationError(JumpRatioError):
    """The jump series did not reach its tolerance within the term cap.

    ``bound`` is the achieved remainder bound and ``partial`` the partial sum,
    both in the units of the quantity being summed.
    """

    def __init__(self, message, bound, partial, n_terms):
        super().__init__(message)
        self.bound = bound
        self.partial = partial
        self.n_terms = n_terms


class QuadratureError(JumpRatioError):
    """Adaptive quadrature failed to meet its tolerance."""

    def __init__(self, message, achieved):
        super().__init__(message)
        self.achieved = achieved
