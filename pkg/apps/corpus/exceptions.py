from __future__ import annotations

from apps.core.exceptions import CorpusIOError, UsageError


class CorpusValidationError(UsageError):
    def __init__(self, message: str, *, run_id: str | None = None, line: int | None = None):
        self.run_id = run_id
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if run_id is not None:
            where.append(f"run {run_id!r}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(f"{prefix}{message}")


class EmptyCorpusError(CorpusValidationError):
    def __init__(self):
        super().__init__("empty corpus")


class DuplicateRunError(CorpusValidationError):
    pass


class SchemaVersionError(CorpusValidationError):
    pass


class UnknownDatasetError(UsageError, KeyError):
    def __init__(self, dataset_id: str):
        self.dataset_id = dataset_id
        super().__init__(f"unknown dataset id {dataset_id!r}")

    def __str__(self) -> str:
        return self.args[0]


class DegenerateDatasetError(UsageError):
    def __init__(self, dataset_id: str):
        self.dataset_id = dataset_id
        super().__init__(f"dataset {dataset_id!r} has a constant range (max == min)")


class TruncationRangeError(UsageError, IndexError):
    pass


__all__ = [
    "CorpusIOError",
    "CorpusValidationError",
    "EmptyCorpusError",
    "DuplicateRunError",
    "SchemaVersionError",
    "UnknownDatasetError",
    "DegenerateDatasetError",
    "TruncationRangeError",
]
