# core/exceptions.py


class OADMMError(Exception):
    """Base class for every error raised by the solver apps."""

    exit_status = 1

    def __init__(self, message='', **details):
        super().__init__(message)
        self.message = message
        self.details = details

    def __str__(self):
        if not self.details:
            return self.message
        extra = ', '.join(f"{key}={value}" for key, value in self.details.items())
        return f"{self.message} ({extra})"


class NumericalFailure(OADMMError):
    """The math broke down (rank loss, stalled line search, violated invariant)."""

    exit_status = 1


class ConfigurationError(OADMMError):
    """Bad input: parameters, shapes, files or dataset descriptors."""

    exit_status = 2
