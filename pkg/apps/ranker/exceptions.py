from __future__ import annotations

from apps.core.exceptions import CorpusIOError, NumericalError, UsageError


class UnknownTokenError(UsageError, KeyError):
    def __init__(self, token: str, run_id: str | None = None):
        self.token = token
        self.run_id = run_id
        where = f" in run {run_id!r}" if run_id is not None else ""
        super().__init__(f"unknown architecture token {token!r}{where}")

    def __str__(self) -> str:
        return self.args[0]


class NoValidPairError(UsageError):
    pass


class TrainingDivergedError(NumericalError):
    def __init__(self, step: int, losses: dict[str, float]):
        self.step = step
        self.losses = dict(losses)
        detail = ", ".join(f"{k}={v!r}" for k, v in losses.items())
        super().__init__(f"non-finite loss at step {step} ({detail})")


class MissingModelError(UsageError, KeyError):
    def __init__(self, length: int, where: str = ""):
        self.length = length
        suffix = f" in {where}" if where else ""
        super().__init__(f"no ranking model for curve length {length}{suffix}")

    def __str__(self) -> str:
        return self.args[0]


class CheckpointError(CorpusIOError):
    pass


__all__ = [
    "UnknownTokenError",
    "NoValidPairError",
    "TrainingDivergedError",
    "MissingModelError",
    "CheckpointError",
]
