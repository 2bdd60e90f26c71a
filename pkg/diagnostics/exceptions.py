# diagnostics/exceptions.py
from core.exceptions import ConfigurationError, NumericalFailure


class MissingCanonicalElement(ConfigurationError):
    """h has no exact subdifferential distance and no subgradient element was supplied."""


class InsufficientHistory(NumericalFailure):
    pass


class EmptyTrace(ConfigurationError):
    pass
