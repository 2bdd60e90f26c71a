# stiefel/exceptions.py
from core.exceptions import ConfigurationError, NumericalFailure


class ShapeMismatch(ConfigurationError):
    pass


class RankDeficient(NumericalFailure):
    """Projection or QR factor is not unique for the given matrix."""


class NotOnManifold(NumericalFailure):
    """A matrix claimed to be a Stiefel point fails the feasibility check."""


class InvalidParameter(ConfigurationError):
    pass
