"""Exception hierarchy shared by every module."""


class MarkovPoissonError(Exception):
    """Base class."""


class InvalidInput(MarkovPoissonError, ValueError):
    """An argument violates a documented precondition."""


class Reducible(MarkovPoissonError):
    """Support graph of the kernel is not strongly connected."""


class ConvergenceFailure(MarkovPoissonError):
    pass


class ZeroDenominator(MarkovPoissonError):
    """A measure is not absolutely continuous w.r.t. the reference measure."""


class SolverFailure(MarkovPoissonError):
    """The transportation simplex hit its iteration cap or lost feasibility."""


class WrongKind(MarkovPoissonError):
    pass


class NotContractive(MarkovPoissonError):
    pass


class SingularSystem(MarkovPoissonError):
    pass


class NumericalFailure(MarkovPoissonError):
    pass


class NoGap(MarkovPoissonError):
    pass


class NotReversible(MarkovPoissonError):
    pass


class InfiniteDiameter(MarkovPoissonError):
    pass
