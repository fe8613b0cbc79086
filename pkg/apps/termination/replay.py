# apps/termination/replay.py
from __future__ import annotations

import csv
import logging
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from pathlib import Path

from apps.core.exceptions import CorpusIOError
from apps.corpus.records import NormalizationStats, RunRecord
from apps.corpus.services import truncate
from apps.ranker.bank import RankerBank, cadence_grid

from .exceptions import PolicyConfigurationError
from .policies import (
    CheckpointDecision,
    PolicyKind,
    TerminationPolicy,
    should_stop_last_value,
    should_stop_lcranknet,
)
from .state import SearchState

logger = logging.getLogger(__name__)

TRACE_COLUMNS = ("run_id", "epoch", "statistic", "action")


@dataclass(frozen=True)
class TraceRow:
    run_id: str
    epoch: int
    statistic: float | None
    action: str
    reason: str = ""

    def as_csv(self) -> list[str]:
        stat = "" if self.statistic is None else repr(float(self.statistic))
        return [self.run_id, str(self.epoch), stat, str(self.action)]


@dataclass(frozen=True)
class ReplayDecision:
    run_id: str
    stop_epoch: int
    length: int
    probabilities: tuple[tuple[int, float], ...] = ()
    trace: tuple[TraceRow, ...] = ()

    @property
    def stopped_early(self) -> bool:
        return self.stop_epoch < self.length


@dataclass
class ReplayContext:
    """
    What a replay may know beyond the search state: the ranker bank and the curve
    normalization, widened with every value revealed so far.
    """

    bank: RankerBank | None = None
    stats: NormalizationStats = field(default_factory=NormalizationStats)

    def reveal(self, record: RunRecord, epochs: int) -> None:
        if epochs:
            self.stats = self.stats.extended(
                record.dataset_id, truncate(record, epochs), record.metric_orientation
            )

    def stats_with(self, record: RunRecord, epochs: int) -> NormalizationStats:
        return self.stats.extended(
            record.dataset_id, truncate(record, epochs), record.metric_orientation
        )


def _consult(
    run: RunRecord,
    epoch: int,
    state: SearchState,
    policy: TerminationPolicy,
    context: ReplayContext,
) -> CheckpointDecision:
    if policy.kind == PolicyKind.LCRANKNET:
        return should_stop_lcranknet(
            run, epoch, state, policy, context.bank, context.stats_with(run, epoch)
        )
    return should_stop_last_value(run, epoch, state, policy)


def replay_policy(
    run: RunRecord,
    state: SearchState,
    policy: TerminationPolicy,
    context: ReplayContext | None = None,
) -> ReplayDecision:
    """
    Reveal `run` epoch by epoch, consulting `policy` every `cadence` epochs.

    The first run of a search (no incumbent yet) always trains to completion. Completed
    runs may become the incumbent; stopped runs never do.
    """
    if policy.is_schedule:
        raise PolicyConfigurationError(f"{policy.name} allocates epochs per batch, not per run")
    context = context or ReplayContext()
    length = run.length
    stop_epoch = length
    trace: list[TraceRow] = []
    probabilities: list[tuple[int, float]] = []

    if policy.kind != PolicyKind.NONE and state.has_incumbent:
        for epoch in cadence_grid(length, policy.cadence):
            decision = _consult(run, epoch, state, policy, context)
            trace.append(
                TraceRow(run.run_id, epoch, decision.statistic, decision.action, decision.reason)
            )
            if policy.kind == PolicyKind.LCRANKNET and decision.statistic is not None:
                probabilities.append((epoch, decision.statistic))
            if decision.stop:
                stop_epoch = epoch
                break

    state.reveal(stop_epoch)
    context.reveal(run, stop_epoch)
    if stop_epoch == length:
        state.complete(run)
    return ReplayDecision(
        run_id=run.run_id,
        stop_epoch=stop_epoch,
        length=length,
        probabilities=tuple(probabilities),
        trace=tuple(trace),
    )


def write_trace_csv(
    decisions: Iterable[ReplayDecision], path: str | Path, *, header: Sequence[str] = ()
) -> Path:
    """Decision trace: one row per consulted checkpoint. `header` lines are written as comments."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="") as fh:
            for line in header:
                fh.write(f"# {line}\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(TRACE_COLUMNS)
            for decision in decisions:
                for row in decision.trace:
                    writer.writerow(row.as_csv())
    except OSError as exc:
        raise CorpusIOError(f"cannot write trace {path}: {exc}") from exc
    return path


__all__ = [
    "TraceRow",
    "ReplayDecision",
    "ReplayContext",
    "replay_policy",
    "write_trace_csv",
    "TRACE_COLUMNS",
]
