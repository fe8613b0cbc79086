# apps/core/exceptions.py
"""
Project-wide exception hierarchy.

Every error carries the process exit code the management commands use when it escapes
a command: 2 usage / bad input, 3 I/O, 4 numeric failure.
"""

from __future__ import annotations

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_NUMERIC = 4


class LCRankError(Exception):
    exit_code = EXIT_USAGE


class UsageError(LCRankError, ValueError):
    exit_code = EXIT_USAGE


class ConfigurationError(UsageError):
    pass


class CorpusIOError(LCRankError, OSError):
    exit_code = EXIT_IO


class NumericalError(LCRankError, ArithmeticError):
    exit_code = EXIT_NUMERIC


__all__ = [
    "EXIT_OK",
    "EXIT_USAGE",
    "EXIT_IO",
    "EXIT_NUMERIC",
    "LCRankError",
    "UsageError",
    "ConfigurationError",
    "CorpusIOError",
    "NumericalError",
]
