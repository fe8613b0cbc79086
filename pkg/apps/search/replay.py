# apps/search/replay.py
"""
Random search over the stored runs of a held-out dataset, replayed under a termination
policy. Time is counted in revealed epochs.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import numpy as np

from apps.corpus.records import Corpus, NormalizationStats, RunRecord
from apps.corpus.services import lodo_split, normalized_final
from apps.ranker.bank import RankerBank
from apps.termination.policies import PolicyKind, TerminationPolicy
from apps.termination.replay import ReplayContext, ReplayDecision, replay_policy
from apps.termination.schedulers import (
    ScheduleResult,
    hyperband_schedule,
    successive_halving_schedule,
)
from apps.termination.state import SearchState

from .exceptions import InsufficientRunsError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ReplayResult:
    policy: str
    dataset_id: str
    order_seed: int
    chosen_run_id: str
    regret: float
    epochs_consumed: int
    total_epochs: int
    decisions: tuple[ReplayDecision, ...] = ()

    @property
    def stopped_runs(self) -> int:
        return sum(d.stopped_early for d in self.decisions)

    @property
    def epochs_saved(self) -> int:
        return self.total_epochs - self.epochs_consumed


def search_order(
    runs: Sequence[RunRecord], order_seed: int, limit: int | None = None
) -> list[RunRecord]:
    """The seeded sampling order of a random search, optionally cut to `limit` runs."""
    order = np.random.default_rng(order_seed).permutation(len(runs))
    picked = [runs[i] for i in order]
    return picked if limit is None else picked[:limit]


def reference_run(order: Sequence[RunRecord]) -> RunRecord:
    """Best final in the order; the earliest one wins ties, as it would without termination."""
    best = order[0]
    for run in order[1:]:
        if run.oriented_final > best.oriented_final:
            best = run
    return best


def regret(stats: NormalizationStats, reference: RunRecord, chosen: RunRecord) -> float:
    gap = normalized_final(stats, reference) - normalized_final(stats, chosen)
    return max(0.0, gap)


def _schedule(order: Sequence[RunRecord], policy: TerminationPolicy) -> ScheduleResult:
    if policy.kind == PolicyKind.SUCCESSIVE_HALVING:
        return successive_halving_schedule(order, policy.interval)
    return hyperband_schedule(order, policy.max_resource, policy.eta)


def random_search_replay(
    corpus: Corpus,
    held_out: str,
    policy: TerminationPolicy,
    order_seed: int,
    *,
    bank: RankerBank | None = None,
    runs: int | None = None,
) -> ReplayResult:
    """
    Replay a random search of `runs` held-out configurations (all of them by default).

    The first run trains to completion; later runs are consulted by `policy`. Regret is
    measured in normalized higher-better units against the best run the same order finds
    without termination.
    """
    _, held = lodo_split(corpus, held_out)
    order = search_order(held, order_seed, runs)
    if not order:
        raise InsufficientRunsError(f"no runs to replay for dataset {held_out!r}")
    full_stats = NormalizationStats.from_records(held)
    reference = reference_run(order)
    total = sum(r.length for r in order)

    if policy.is_schedule:
        schedule = _schedule(order, policy)
        chosen = corpus.get(schedule.chosen_run_id)
        decisions = tuple(
            ReplayDecision(r.run_id, schedule.stop_epochs.get(r.run_id, 0), r.length)
            for r in order
        )
        consumed = schedule.epochs_consumed
    else:
        state = SearchState()
        context = ReplayContext(bank=bank)
        decisions = tuple(replay_policy(run, state, policy, context) for run in order)
        chosen = state.incumbent
        consumed = state.epochs_consumed

    result = ReplayResult(
        policy=policy.name,
        dataset_id=held_out,
        order_seed=order_seed,
        chosen_run_id=chosen.run_id,
        regret=regret(full_stats, reference, chosen),
        epochs_consumed=consumed,
        total_epochs=total,
        decisions=decisions,
    )
    logger.info(
        "Replay %s on %s (seed %s): regret=%.4f epochs=%s/%s stopped=%s",
        result.policy,
        held_out,
        order_seed,
        result.regret,
        consumed,
        total,
        result.stopped_runs,
    )
    return result


def simulate_policies(
    corpus: Corpus,
    held_out: str,
    policies: Iterable[TerminationPolicy],
    seeds: Iterable[int],
    *,
    bank: RankerBank | None = None,
    runs: int | None = None,
) -> list[ReplayResult]:
    """Every (policy, seed) cell, in policy-then-seed order."""
    seeds = list(seeds)
    return [
        random_search_replay(corpus, held_out, policy, seed, bank=bank, runs=runs)
        for policy in policies
        for seed in seeds
    ]


__all__ = [
    "ReplayResult",
    "search_order",
    "reference_run",
    "regret",
    "random_search_replay",
    "simulate_policies",
]
