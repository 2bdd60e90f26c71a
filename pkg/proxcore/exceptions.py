# proxcore/exceptions.py
from core.exceptions import ConfigurationError


class SmoothingTooCoarse(ConfigurationError):
    """Smoothing parameter mu is outside (0, 1/(2 W_h)]."""


class BetaTooSmall(ConfigurationError):
    """Penalty beta <= 1/mu, the coupled y-subproblem loses strong convexity."""


class KOutOfRange(ConfigurationError):
    pass


class InvalidParameter(ConfigurationError):
    pass
