"""Exception hierarchy shared by every module of the toolkit."""


class ToolkitError(Exception):
    """Base class for all errors raised by clnrd."""


class ValidationError(ToolkitError, ValueError):
    """Input data failed a structural or probabilistic check."""


class NegativeProbability(ValidationError):
    pass


class SumNotOne(ValidationError):
    pass


class DuplicateAxis(ValidationError):
    pass


class UnknownVariable(ValidationError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class OverlappingSets(ValidationError):
    pass


class AxisCollision(ValidationError):
    pass


class OutOfRange(ValidationError):
    pass


class BadAxisLabeling(ValidationError):
    pass


class ChannelAxisMismatch(ValidationError):
    pass


class DegenerateMarginal(ValidationError):
    """A source symbol has zero probability and its row had to be dropped."""


class BudgetExceeded(ToolkitError):
    """A tensor or enumeration would exceed the configured size budget."""


class OptimizerDiverged(ToolkitError):
    """Every restart produced a non-finite objective value."""


class InfeasibleDistortion(ToolkitError):
    pass


class DistortionViolated(ToolkitError):
    pass


class NotDegraded(ToolkitError):
    pass


class PsiMissing(ToolkitError):
    pass


class NotTwoSource(ToolkitError):
    pass


class NoDegradationRelation(ToolkitError):
    pass


class ParseError(ValidationError):
    """Problem file could not be parsed; ``where`` names the field or line."""

    def __init__(self, message, where=None):
        self.where = where
        super().__init__(f"{where}: {message}" if where else message)


class ReproductionFailed(ToolkitError, AssertionError):
    pass
