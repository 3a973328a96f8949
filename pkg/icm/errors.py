class IcmError(Exception):
    """Base class of all errors raised by icm."""

class DimensionError(IcmError, ValueError):
    """Shapes of the inputs do not fit together."""

class FormatError(IcmError, ValueError):
    """A file does not follow the expected on-disk format."""

class ContractError(IcmError, ValueError):
    """A value lies outside the domain where an operation is defined."""

class UsageError(IcmError, ValueError):
    """Invalid command line or config file parameters."""
