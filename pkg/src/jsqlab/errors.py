"""Exception hierarchy. The CLI maps ConfigError to exit 2 and NumericalError to exit 3."""

from __future__ import annotations


class JsqlabError(Exception):
    code = "ERROR"


class ConfigError(JsqlabError, ValueError):
    """Invalid user-supplied parameters or configuration."""

    def __init__(self, message: str, code: str = "CONFIG"):
        super().__init__(message)
        self.code = code


class DomainError(ConfigError):
    """Argument outside the domain where a function is defined."""

    def __init__(self, message: str, code: str = "DOMAIN"):
        super().__init__(message, code)


class NumericalError(JsqlabError, ArithmeticError):
    code = "NUMERICAL"


class ConvergenceError(NumericalError):
    code = "NO_CONVERGENCE"


class TruncationOverflow(NumericalError):
    code = "TRUNCATION_OVERFLOW"


class StateLimitExceeded(NumericalError):
    code = "STATE_LIMIT"
