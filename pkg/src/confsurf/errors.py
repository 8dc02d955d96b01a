"""Exception hierarchy shared by all confsurf modules."""


class ConfsurfError(Exception):
    """Base class for every error raised by the package."""


class PoleOnAxis(ConfsurfError, ValueError):
    pass


class PoleHit(ConfsurfError, ZeroDivisionError):
    pass


class OrderOverflow(ConfsurfError, ArithmeticError):
    pass


class NotIntegrableToRational(ConfsurfError, ArithmeticError):
    pass


class PolynomialGrowth(ConfsurfError, ArithmeticError):
    """Multiplying by ``u`` would leave the space of decaying rationals."""


class ZeroModeError(ConfsurfError, ArithmeticError):
    """Antiderivative requested for a field with non-zero mean."""


class ContinuationUnreliable(ConfsurfError):
    """Off-axis evaluation requested above the validated height."""


class NumericalFailure(ConfsurfError):
    """Base for failures of time integration or root finding."""


class AnalyticityLoss(NumericalFailure):
    pass


class StepRejected(NumericalFailure):
    pass


class Blowup(NumericalFailure):
    pass


class SecularDrift(NumericalFailure):
    pass


class NoConvergence(NumericalFailure):
    pass


class LeftValidityRegion(NumericalFailure):
    pass


class TrackLost(NumericalFailure):
    def __init__(self, message, last_good_time=None):
        super().__init__(message)
        self.last_good_time = last_good_time


class ContourThroughZero(NumericalFailure):
    pass


class BranchAmbiguity(NumericalFailure):
    pass


class NonMonotone(NumericalFailure):
    pass


class DivisionByZeroOnGrid(NumericalFailure):
    pass


class SingularTime(ConfsurfError, ValueError):
    pass


class ConfigError(ConfsurfError):
    pass
