"""Exception types shared across the package."""


class EncodingError(ValueError):
    """A digit string is malformed for the requested encoding."""


class UnsupportedMixerError(ValueError):
    """The requested mixer cannot act on the given radices."""


class ArityError(ValueError):
    """An angle array has the wrong number of entries."""


class MemoryCapError(RuntimeError):
    """A requested allocation would exceed the configured memory cap."""


class ConfigError(ValueError):
    """An experiment configuration is invalid or incomplete."""


class OptimizationError(RuntimeError):
    """The objective became non-finite during a local optimization."""
