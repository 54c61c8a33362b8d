"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """A user-supplied configuration value is invalid."""


class NoFeasibleState(RuntimeError):
    """No placement satisfying the per-server overload budget could be found."""


class SizeCapExceeded(RuntimeError):
    """The instance is too large for exhaustive enumeration."""
