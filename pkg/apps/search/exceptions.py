from __future__ import annotations

from apps.core.exceptions import UsageError


class UndefinedCorrelationError(UsageError, ArithmeticError):
    def __init__(self, message: str = "undefined correlation"):
        super().__init__(message)


class InsufficientRunsError(UsageError):
    pass


__all__ = ["UndefinedCorrelationError", "InsufficientRunsError"]
