"""Exception types shared across the toolkit.

The CLI maps these onto exit codes: ConfigError -> 2, DataError -> 3.
Contract violations inside library code (bad shapes, bad arguments) raise
plain ValueError like any numpy-style library.
"""


class FacebenchError(Exception):
    """Base class for toolkit-specific failures."""


class ConfigError(FacebenchError):
    """Invalid configuration: bad flag value, malformed config file, unknown key."""


class DataError(FacebenchError):
    """Input data cannot satisfy a requirement: missing file, malformed manifest
    row, pool too small for a sampling protocol."""
