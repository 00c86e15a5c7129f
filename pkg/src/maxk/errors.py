"""Exception types shared across the package."""


class MaxkError(Exception):
    """Base class for all package errors."""


class InvalidKError(MaxkError, ValueError):
    pass


class InvalidCountError(MaxkError, ValueError):
    pass


class InsufficientGroupError(MaxkError, ValueError):
    pass


class LooUndefinedError(MaxkError, ValueError):
    """Leave-one-out needs k >= 2."""


class OracleTooLargeError(MaxkError, ValueError):
    pass


class ZeroDenominatorError(MaxkError, ZeroDivisionError):
    pass


class NumericalFailure(MaxkError, FloatingPointError):
    """Raised when a training update produces a non-finite gradient."""

    def __init__(self, message: str, state: dict | None = None):
        super().__init__(message)
        self.state = state or {}


class ConfigError(MaxkError, ValueError):
    pass


class ReportError(MaxkError, ValueError):
    pass
