"""Exception types shared across the package."""


class PairCorrError(Exception):
    """Base class for all errors raised by paircorr."""


class InvalidSpec(PairCorrError, ValueError):
    pass


class NonIncreasing(PairCorrError, ValueError):
    pass


class SequenceOverflow(PairCorrError, OverflowError):
    pass


class TooShort(PairCorrError, ValueError):
    pass


class GuardExceeded(PairCorrError, RuntimeError):
    """A brute-force routine was asked to run above its size guard."""


class MemoryBudgetExceeded(PairCorrError, MemoryError):
    pass


class IntervalTooWide(PairCorrError, ValueError):
    pass


class NotReal(PairCorrError, ArithmeticError):
    """A trigonometric polynomial evaluated to a non-real value."""


class BadParams(PairCorrError, ValueError):
    pass


class OutOfBand(PairCorrError, ValueError):
    pass


class QuadratureDivergence(PairCorrError, ArithmeticError):
    """Numerical quadrature disagrees with its exact closed form."""


class TailTooFat(PairCorrError, ArithmeticError):
    pass


class Degenerate(PairCorrError, ValueError):
    pass


class CheckFailed(PairCorrError, AssertionError):
    """An internal self-check did not hold."""
