"""Exception types shared across the package."""


class LogitDcbmError(Exception):
    """Base class for all package errors."""


class ConfigError(LogitDcbmError):
    """Invalid configuration: bad sizes, counts, file schema, CLI arguments."""


class DomainError(LogitDcbmError, ValueError):
    """Numeric input outside the operation's domain (negative rates, bad probabilities)."""


class EstimationError(LogitDcbmError):
    """An estimator could not produce a value (zero denominator, collapsed community).

    Carries optional diagnostic payload in ``details``.
    """

    def __init__(self, message, **details):
        super().__init__(message)
        self.details = details
