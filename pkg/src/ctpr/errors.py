"""Exception types shared across the package."""


class InputError(ValueError):
    """Caller passed an argument outside an operation's domain."""


class ConfigError(ValueError):
    """A configuration value (or combination) is unusable."""


class FormatError(ValueError):
    """A corpus or predictions file violates its on-disk format."""
