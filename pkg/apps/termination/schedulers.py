# apps/termination/schedulers.py
"""
Successive Halving and Hyperband replayed over stored curves.

Runs are resumable: promoting a run to a larger resource only reveals the additional
epochs, so a run's cost is the largest resource it ever reached.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass

from apps.corpus.records import RunRecord

from .exceptions import PolicyConfigurationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ScheduleResult:
    stop_epochs: dict[str, int]
    chosen_run_id: str | None

    @property
    def epochs_consumed(self) -> int:
        return sum(self.stop_epochs.values())


def _best_partial(record: RunRecord, epochs: int) -> float:
    return max(record.oriented(v) for v in record.curve[:epochs])


def _rank(runs: Sequence[tuple[int, RunRecord]], epochs: int) -> list[tuple[int, RunRecord]]:
    """Best partial value first; ties go to the run that comes first in corpus order."""

    def key(item: tuple[int, RunRecord]):
        index, record = item
        return (-_best_partial(record, min(epochs, record.length)), index)

    return sorted(runs, key=key)


# ----------------------------
# Successive Halving
# ----------------------------
def successive_halving_schedule(runs: Sequence[RunRecord], interval: int) -> ScheduleResult:
    """
    Every round trains all survivors `interval` more epochs, then keeps the better
    floor(n/2). When a single survivor is left it trains one more round; a lone starting
    run trains to completion.
    """
    if interval < 1:
        raise PolicyConfigurationError("interval must be >= 1")
    if not runs:
        return ScheduleResult({}, None)
    if len(runs) == 1:
        only = runs[0]
        return ScheduleResult({only.run_id: only.length}, only.run_id)

    reached = {r.run_id: 0 for r in runs}
    survivors = list(enumerate(runs))
    while True:
        for _, run in survivors:
            reached[run.run_id] = min(reached[run.run_id] + interval, run.length)
        exhausted = all(reached[run.run_id] >= run.length for _, run in survivors)
        if len(survivors) == 1 or exhausted:
            break
        epochs = max(reached[run.run_id] for _, run in survivors)
        survivors = _rank(survivors, epochs)[: len(survivors) // 2]

    chosen = _rank(survivors, max(reached.values()))[0][1]
    logger.debug("SH over %s runs consumed %s epochs", len(runs), sum(reached.values()))
    return ScheduleResult(reached, chosen.run_id)


# ----------------------------
# Hyperband
# ----------------------------
@dataclass(frozen=True)
class Round:
    runs: int
    resource: int


@dataclass(frozen=True)
class Bracket:
    s: int
    rounds: tuple[Round, ...]

    @property
    def initial_runs(self) -> int:
        return self.rounds[0].runs

    @property
    def initial_resource(self) -> int:
        return self.rounds[0].resource

    @property
    def budget(self) -> int:
        return sum(r.runs * r.resource for r in self.rounds)


def max_bracket_index(max_resource: int, eta: int) -> int:
    """floor(log_eta R), computed exactly on integers."""
    s = 0
    while eta ** (s + 1) <= max_resource:
        s += 1
    return s


def hyperband_brackets(max_resource: int, eta: int = 3) -> tuple[Bracket, ...]:
    if max_resource < 1 or eta < 2:
        raise PolicyConfigurationError("Hyperband needs R >= 1 and eta >= 2")
    s_max = max_bracket_index(max_resource, eta)
    brackets = []
    for s in range(s_max, -1, -1):
        n = -(-((s_max + 1) * eta**s) // (s + 1))  # ceil
        rounds = tuple(
            Round(runs=n // eta**i, resource=max(1, max_resource * eta**i // eta**s))
            for i in range(s + 1)
        )
        brackets.append(Bracket(s, rounds))
    return tuple(brackets)


def hyperband_schedule(
    runs: Sequence[RunRecord], max_resource: int | None = None, eta: int = 3
) -> ScheduleResult:
    """
    Hyperband over `runs` in order: each bracket takes the next n runs and runs SH on
    them. The chosen run is the best one that reached the full resource.
    """
    if not runs:
        return ScheduleResult({}, None)
    max_resource = max_resource or max(r.length for r in runs)
    reached: dict[str, int] = {}
    finishers: list[tuple[int, RunRecord]] = []
    cursor = 0
    for bracket in hyperband_brackets(max_resource, eta):
        if cursor >= len(runs):
            break
        take = min(bracket.initial_runs, len(runs) - cursor)
        survivors = [(cursor + n, r) for n, r in enumerate(runs[cursor : cursor + take])]
        cursor += take
        for i, rnd in enumerate(bracket.rounds):
            if i > 0:
                survivors = _rank(survivors, bracket.rounds[i - 1].resource)[: max(rnd.runs, 1)]
            for _, run in survivors:
                epochs = min(rnd.resource, run.length)
                reached[run.run_id] = max(reached.get(run.run_id, 0), epochs)
        finishers.extend(
            (n, r) for n, r in survivors if reached[r.run_id] >= min(max_resource, r.length)
        )
    pool = finishers or [(n, r) for n, r in enumerate(runs) if r.run_id in reached]
    chosen = _rank(pool, max_resource)[0][1]
    return ScheduleResult(reached, chosen.run_id)


__all__ = [
    "ScheduleResult",
    "successive_halving_schedule",
    "Round",
    "Bracket",
    "max_bracket_index",
    "hyperband_brackets",
    "hyperband_schedule",
]
