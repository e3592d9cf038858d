"""Exception hierarchy shared by all chevflag modules."""


class ChevflagError(Exception):
    pass


class ConfigError(ChevflagError):
    """Invalid configuration: unsupported type/rank/field, bad caps."""


class DomainError(ChevflagError):
    """An argument is outside the mathematical domain of the operation."""


class PreconditionError(DomainError):
    """A stated precondition of an operation does not hold."""


class ResourceError(ChevflagError):
    """A configured cap (dimension, subgroup size, budget) was exceeded."""


class UnsupportedOracle(ChevflagError):
    """A cross-validation oracle is not available for this root system."""
