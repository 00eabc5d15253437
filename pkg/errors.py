"""Exception hierarchy shared by every module of the toolkit."""


class KorobovError(Exception):
    """Base class for all errors raised by this package."""


class PreconditionError(KorobovError, ValueError):
    """An operation was called outside its documented domain."""


class EvaluationError(PreconditionError):
    """A function produced a non-finite value on a quadrature grid."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class AliasingError(PreconditionError):
    """The analysis grid is too coarse for the requested Fourier cutoff."""


class InconsistentSpecError(PreconditionError):
    """A JacksonSpec whose degree, level and profile do not agree."""


class DimensionMismatchError(PreconditionError):
    pass


class DegenerateTargetError(PreconditionError):
    """The sampled construction was asked to represent a constant."""


class LabelError(PreconditionError):
    pass


class EmptyDataError(PreconditionError):
    pass


class InstanceTooLargeError(PreconditionError):
    """The brute-force covering oracle only handles d=1, m<=2."""


class FitFailureError(KorobovError, RuntimeError):
    """Fewer than three usable points survived for a rate fit."""


class PartialResultError(KorobovError, RuntimeError):
    """Training stopped before a full restart; ``best`` holds what was reached."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class UnsatisfiableBudgetError(KorobovError, RuntimeError):
    """No epsilon below the search ceiling satisfies the capacity condition."""
