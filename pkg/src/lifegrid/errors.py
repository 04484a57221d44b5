"""Exception types shared across the package."""


class LifegridError(Exception):
    """Base class for all domain errors."""


class BadWeights(LifegridError):
    """Path weights are not a strictly positive probability vector."""


class NonRefiningFiltration(LifegridError):
    """A partition at time t+1 is not a refinement of the one at t."""


class TimeOutOfRange(LifegridError):
    """A time index falls outside the grid 0..horizon."""


class MeasurabilityError(LifegridError):
    """A process does not have the measurability its role requires."""


class NotMartingale(LifegridError):
    """An input failed the martingale increment check."""


class DomainError(LifegridError):
    """A numeric input violates its stated domain (e.g. phi outside [0,1])."""


class TermOutOfRange(LifegridError):
    """A contract term lies outside the time grid."""


class AssumptionViolated(LifegridError):
    """The market model fails the (S, tau) standing assumptions."""


class NotAdmissible(LifegridError):
    """A trading strategy is not 0-admissible (V_T != 0)."""


class DegenerateInstrument(LifegridError):
    """A hedging instrument carries no residual risk anywhere."""


class BudgetExceeded(LifegridError):
    """A model construction would exceed the configured path budget."""


class DegenerateModel(LifegridError):
    """A model construction produced a degenerate object (e.g. tau never finite)."""


class ConfigError(LifegridError):
    """A scenario configuration document is malformed."""

    def __init__(self, message: str, location: str = ""):
        self.location = location
        super().__init__(f"{message} (at {location})" if location else message)
