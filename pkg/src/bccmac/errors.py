"""Exception hierarchy shared by the library and the CLI."""


class BccMacError(Exception):
    """Base class for all errors raised by bccmac."""


class ValidationError(BccMacError, ValueError):
    """Invalid input: malformed distribution, bad argument, missing field."""


class ConfigurationError(BccMacError):
    """A well-formed configuration that cannot be realised.

    Raised when a rate violates the inequality needed to build a codebook,
    or when a codebook / decoder search space exceeds its cap.
    """
