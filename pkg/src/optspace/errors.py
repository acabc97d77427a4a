"""Exception types shared across the package."""


class InvalidArgumentError(ValueError):
    pass


class DegenerateInputError(ValueError):
    pass


class NoGapError(ValueError):
    """Flat singular-value spectrum; the rank has to be supplied."""


class CutLocusError(ValueError):
    """Two subspaces have a principal angle at (or numerically at) pi/2."""


class RegularizerOverflowError(FloatingPointError):
    """A row norm is so far above the incoherence cap that the penalty overflows.

    Rescale the offending rows or raise ``mu0``.
    """


class ConvergenceError(RuntimeError):
    """Iteration cap reached; ``estimate`` carries the best value so far."""

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate
