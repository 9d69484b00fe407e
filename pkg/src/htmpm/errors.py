"""Exception hierarchy shared across the package.

ValidationError maps to CLI exit code 1, DataError to exit code 2.
"""


class HtmpmError(Exception):
    pass


class ValidationError(HtmpmError):
    """Bad configuration or bad argument values."""


class DataError(HtmpmError):
    """Malformed or inconsistent input data."""


class DimensionError(ValidationError):
    """Operand sizes disagree."""


class StreamError(DataError):
    """Records violate the streaming contract (e.g. out-of-order timestamps)."""
