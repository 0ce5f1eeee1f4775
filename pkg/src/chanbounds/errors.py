"""Exception hierarchy shared by every module."""


class ChanboundsError(Exception):
    pass


class InvalidInput(ChanboundsError, ValueError):
    pass


class ShapeError(InvalidInput):
    pass


class NotHermitian(InvalidInput):
    pass


class NotPSD(InvalidInput):
    pass


class NotCPTP(InvalidInput):
    pass


class KrausCountMismatch(InvalidInput):
    pass


class OutOfDomain(InvalidInput):
    pass


class UnknownChannel(InvalidInput):
    pass


class InvalidParam(InvalidInput):
    pass


class SingularState(InvalidInput):
    pass


class NoAdmissiblePair(InvalidInput):
    pass


class TooLarge(InvalidInput):
    pass


class NoFiniteN(ChanboundsError, ArithmeticError):
    """The quadratic query inequality has no integer solution."""


class SolverFailure(ChanboundsError, RuntimeError):
    """Raised when an SDP needed for a bound did not reach an optimal status."""

    def __init__(self, message, solution=None):
        super().__init__(message)
        self.solution = solution
