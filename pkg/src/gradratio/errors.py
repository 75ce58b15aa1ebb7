"""Exception types shared across the toolkit."""


class InvalidArgument(ValueError):
    """Bad shapes, out-of-range parameters, malformed files."""


class Unsupported(NotImplementedError):
    """A requested variant exists in principle but is not implemented."""


class InvalidState(ValueError):
    """Solver state for which a quantity is undefined (e.g. ``h == 0``)."""


class NumericalBreakdown(ArithmeticError):
    """Non-finite values or loss of positive definiteness inside an iteration."""


class DivergenceDetected(RuntimeError):
    """``||h||_2`` dropped below the configured floor.

    The partially filled convergence trace is attached so callers can
    still write it out.
    """

    def __init__(self, message, trace=None, image=None):
        super().__init__(message)
        self.trace = trace
        self.image = image
