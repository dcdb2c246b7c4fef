"""Exception types shared across the package."""


class FopaeqError(Exception):
    """Base class for package errors."""


class StateError(FopaeqError):
    """Raised when an operation is applied to a state that cannot support it
    (empty dictionary, too-short window, ...)."""


class NumericalError(FopaeqError):
    """Raised when a matrix update would divide by a vanishing Schur
    complement or pivot."""


class ConfigError(FopaeqError, ValueError):
    """Raised for invalid or unachievable configuration values. The message
    carries the offending field path."""
