"""Exception hierarchy shared across the package."""


class PulabError(Exception):
    """Base class for all errors raised by this package."""


class InvalidSpecError(PulabError):
    """A network spec, config, or input violates its stated contract."""


class UsageError(PulabError):
    """The API was called in an unsupported way (e.g. backward twice)."""


class NumericError(PulabError):
    """A computation produced non-finite values."""


class DataFormatError(PulabError):
    """A data file does not match its binary format."""
