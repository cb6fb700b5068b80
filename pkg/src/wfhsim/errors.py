"""Exception types shared across the package."""


class WfhError(Exception):
    """Base class for all library errors."""


class CutoffExceeded(WfhError):
    """A photon index exceeded the truncation/table range it must stay in."""


class InvalidWeights(WfhError, ValueError):
    """Mixture weights outside the probability simplex."""


class InvalidSqueezing(WfhError, ValueError):
    """Squeezing parameter with |lambda| >= 1."""


class InvalidEfficiency(WfhError, ValueError):
    """Detector efficiency outside [0, 1]."""


class Undefined(WfhError):
    """Quantity has no value for the given input (e.g. g2 of vacuum)."""


class DimensionMismatch(WfhError, ValueError):
    """Operands with incompatible shapes."""


class IllConditioned(WfhError):
    """Linear inversion rejected: requested support is not recoverable."""


class WrongLayer(WfhError, ValueError):
    """Operation only defined for a specific photon layer."""


class MemoryBudgetExceeded(WfhError):
    """Dense simulation would exceed the configured memory budget."""


class ConfigError(WfhError, ValueError):
    """Missing or contradictory run configuration."""
