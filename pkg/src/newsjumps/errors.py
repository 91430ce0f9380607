class ConfigError(ValueError):
    """Invalid user-supplied configuration or column mapping."""


class DataError(RuntimeError):
    """Input data that cannot be processed under the given configuration."""
