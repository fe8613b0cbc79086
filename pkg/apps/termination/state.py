# apps/termination/state.py
from __future__ import annotations

import math
from dataclasses import dataclass, field

from apps.corpus.records import NormalizationStats, RunRecord


@dataclass
class SearchState:
    """
    Incumbent bookkeeping of one search.

    Values are kept in each run's raw units flipped so that larger is better; normalized
    views are derived on demand because the normalization of a held-out dataset keeps
    changing while its runs are revealed.
    """

    incumbent: RunRecord | None = None
    y_max: float = -math.inf
    completed: list[RunRecord] = field(default_factory=list)
    epochs_consumed: int = 0

    @property
    def has_incumbent(self) -> bool:
        return self.incumbent is not None

    @property
    def completed_finals(self) -> list[float]:
        return [r.oriented_final for r in self.completed]

    def reveal(self, epochs: int) -> None:
        if epochs < 0:
            raise ValueError("cannot reveal a negative number of epochs")
        self.epochs_consumed += epochs

    def complete(self, record: RunRecord) -> bool:
        """Register a fully observed run; returns True when it becomes the incumbent."""
        self.completed.append(record)
        if record.oriented_final > self.y_max:
            self.incumbent = record
            self.y_max = record.oriented_final
            return True
        return False

    def normalized_finals(self, stats: NormalizationStats) -> list[float]:
        return [float(stats.apply(r.dataset_id, [r.final])[0]) for r in self.completed]


__all__ = ["SearchState"]
