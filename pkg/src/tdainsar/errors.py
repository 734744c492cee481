"""Exception and warning types shared across the package."""


class TdaError(Exception):
    """Base class for computation errors raised by the toolkit."""


class DegenerateBaselineError(TdaError, ValueError):
    pass


class DegenerateGeometryError(TdaError, ValueError):
    pass


class UnwrapError(TdaError):
    """Raised when the flood fill cannot reach part of the mask."""

    def __init__(self, message, unreachable=None):
        super().__init__(message)
        self.unreachable = [] if unreachable is None else list(unreachable)


class RankDeficientError(TdaError, ArithmeticError):
    """Raised when the joint model has a null space after datum fixes."""

    def __init__(self, message, direction=None):
        super().__init__(message)
        self.direction = direction


class FormatError(TdaError, ValueError):
    """Raised when a CSV or JSON input file is malformed."""


class ApproximationWarning(UserWarning):
    """The Gaussian phase-noise approximation is used outside its range."""


class PhaseContinuityWarning(UserWarning):
    """Scene height span exceeds the short-baseline height ambiguity."""
