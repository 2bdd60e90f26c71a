# oadmm/exceptions.py
from core.exceptions import ConfigurationError, NumericalFailure


class ConfigInvalid(ConfigurationError):
    """A solver parameter violates its admissible range."""


class LineSearchStalled(NumericalFailure):
    pass


class InvariantViolation(NumericalFailure):
    """A runtime check (debug mode) failed: dual bound, dual identity or EP optimality."""
