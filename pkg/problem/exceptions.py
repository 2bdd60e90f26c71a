# problem/exceptions.py
from core.exceptions import ConfigurationError


class DimensionMismatch(ConfigurationError):
    pass


class EmptyData(ConfigurationError):
    pass


class DatasetNotFound(ConfigurationError):
    """Descriptor points at a file that does not exist."""


class ParseError(ConfigurationError):
    pass


class DegenerateColumn(ConfigurationError):
    """A data column is identically zero and cannot be normalized."""
