from core.exceptions import ConfigurationError


class SpecInvalid(ConfigurationError):
    """The experiment spec failed validation; details carry the field errors."""


class OutputNotWritable(ConfigurationError):
    pass
