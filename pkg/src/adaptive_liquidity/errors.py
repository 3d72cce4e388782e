"""Exception types raised across the package."""


class MarketError(ValueError):
    """Base class for all package errors."""


class InvalidWeightsError(MarketError):
    pass


class InvalidScaleError(MarketError):
    pass


class InvalidOutcomeError(MarketError):
    pass


class InvalidLossError(MarketError):
    pass


class InvalidBudgetError(MarketError):
    pass


class ShapeError(MarketError):
    pass


class ConfigError(MarketError):
    pass


class InfeasibleTargetError(MarketError):
    pass


class PoisonedStateError(MarketError):
    """Raised once a market has produced a non-finite quantity."""
