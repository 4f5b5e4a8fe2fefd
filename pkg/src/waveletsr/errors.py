"""Exception types shared across the toolkit."""


class ShapeError(ValueError):
    """Tensor arguments have incompatible or unsupported dimensions."""


class ConfigError(ValueError):
    """A configuration value or document is invalid."""


class DataFormatError(IOError):
    """A file on disk is not in the expected format."""
