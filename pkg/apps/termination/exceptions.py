from __future__ import annotations

from apps.core.exceptions import ConfigurationError, UsageError


class PolicyConfigurationError(ConfigurationError):
    pass


class NoIncumbentError(UsageError):
    def __init__(self, message: str = "no completed run to compare against yet"):
        super().__init__(message)


__all__ = ["PolicyConfigurationError", "NoIncumbentError"]
