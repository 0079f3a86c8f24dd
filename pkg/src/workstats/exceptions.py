"""Exception types shared across the library."""


class WorkstatsError(Exception):
    """Base class for all library errors."""


class RangeError(WorkstatsError):
    """Evaluation requested outside a function's or table's validated range."""


class ConvergenceError(WorkstatsError):
    """A series or adaptive rule failed to reach the requested accuracy.

    Carries the best available estimate in ``best`` when one exists.
    """

    def __init__(self, message, best=None, err_estimate=None):
        super().__init__(message)
        self.best = best
        self.err_estimate = err_estimate


class DivergentIntegralError(WorkstatsError):
    """The integrand grows (or decays too slowly) for a finite integral."""


class TimescaleUndefinedError(WorkstatsError):
    """The relaxation function has no integrable tail (e.g. Bessel model)."""


class PrecisionError(WorkstatsError):
    """Floating-point precision insufficient (e.g. Gibbs weights underflow)."""
