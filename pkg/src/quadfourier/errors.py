"""Exception hierarchy shared by every module."""


class QuadFourierError(Exception):
    """Base class for all errors raised by this package."""


class ZeroInverse(QuadFourierError, ZeroDivisionError):
    pass


class BudgetExceeded(QuadFourierError):
    """An exhaustive enumeration would exceed its configured size cap."""

    def __init__(self, what: str, size: int, limit: int):
        super().__init__(f"{what}: size {size} exceeds budget {limit}")
        self.what = what
        self.size = size
        self.limit = limit


class EmptySet(QuadFourierError, ValueError):
    pass


class EmptyLevelSet(QuadFourierError, ValueError):
    pass


class PreconditionUnmet(QuadFourierError, ValueError):
    pass


class SupportViolation(QuadFourierError, ValueError):
    pass


class DimensionTooLarge(QuadFourierError, ValueError):
    pass


class DegenerateCoefficients(QuadFourierError, ValueError):
    pass


class CoefficientSumNonzero(QuadFourierError, ValueError):
    pass


class TooManyRows(QuadFourierError, ValueError):
    pass


class IncrementNotFound(QuadFourierError):
    """Search budget ran out while a dense non-expanding set remained."""

    def __init__(self, message: str, state=None, trace=None):
        super().__init__(message)
        self.state = state
        self.trace = trace


class UnknownSuite(QuadFourierError, ValueError):
    pass


class BadParams(QuadFourierError, ValueError):
    pass
