# apps/search/evolution.py
"""
Regularized (aging) evolution over a tabular pool of stored runs.

A configuration is the run's architecture tokens plus its hyperparameter values. Mutated
children are looked up as the nearest not-yet-evaluated run of the pool, so the stored
curves act as the training oracle. Every evaluation goes through a termination policy;
stopped runs report a predicted final value instead of the true one.
"""

from __future__ import annotations

import logging
from collections import deque
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from apps.core.exceptions import ConfigurationError
from apps.corpus.records import RunRecord
from apps.ranker.bank import RankerBank
from apps.termination.exceptions import PolicyConfigurationError
from apps.termination.policies import TerminationPolicy
from apps.termination.replay import ReplayContext, ReplayDecision, replay_policy
from apps.termination.state import SearchState

from .exceptions import InsufficientRunsError

logger = logging.getLogger(__name__)

MAX_RESAMPLES = 32


@dataclass(frozen=True)
class EvolutionConfig:
    population: int = 10
    tournament: int = 3
    mutation_rate: float = 0.0  # per-coordinate resample probability; one is always resampled
    budget: int = 100
    seed: int = 42

    def __post_init__(self):
        if not 1 <= self.tournament <= self.population <= self.budget:
            raise ConfigurationError(
                "need 1 <= tournament <= population <= budget, got "
                f"T={self.tournament} P={self.population} budget={self.budget}"
            )
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise ConfigurationError(f"mutation_rate must lie in [0, 1], got {self.mutation_rate}")


@dataclass(frozen=True)
class Individual:
    run: RunRecord
    objective: float
    decision: ReplayDecision

    @property
    def terminated(self) -> bool:
        return self.decision.stopped_early


@dataclass(frozen=True)
class TracePoint:
    evaluation: int
    run_id: str
    cumulative_epochs: int
    objective: float
    terminated: bool
    incumbent_run_id: str
    incumbent_objective: float


@dataclass(frozen=True)
class EvolutionResult:
    best: Individual
    trace: tuple[TracePoint, ...]

    @property
    def evaluations(self) -> int:
        return len(self.trace)

    @property
    def epochs_consumed(self) -> int:
        return self.trace[-1].cumulative_epochs if self.trace else 0


# ----------------------------
# search space over a pool
# ----------------------------
class RunPool:
    """Configurations of `runs` with per-coordinate value domains."""

    def __init__(self, runs: Sequence[RunRecord]):
        if not runs:
            raise InsufficientRunsError("evolution needs at least one run")
        self.runs = tuple(runs)
        self.hparam_names = tuple(sorted(self.runs[0].hparams))
        self.vectors = [self.vector(r) for r in self.runs]
        width = max(len(v) for v in self.vectors)
        self.domains: list[tuple] = []
        for i in range(width):
            seen = {v[i] for v in self.vectors if i < len(v)}
            self.domains.append(tuple(sorted(seen, key=repr)))

    def vector(self, run: RunRecord) -> tuple:
        return tuple(run.arch_tokens) + tuple(run.hparams[k] for k in self.hparam_names)

    def mutate(self, parent: RunRecord, rate: float, rng: np.random.Generator) -> tuple:
        child = list(self.vector(parent))
        chosen = [i for i in range(len(child)) if rng.random() < rate]
        if not chosen:
            chosen = [int(rng.integers(len(child)))]
        for i in chosen:
            domain = self.domains[i]
            if len(domain) < 2:
                continue
            for _ in range(MAX_RESAMPLES):
                value = domain[int(rng.integers(len(domain)))]
                if value != child[i]:
                    child[i] = value
                    break
        return tuple(child)

    def nearest_unevaluated(self, target: tuple, evaluated: set[str]) -> RunRecord | None:
        """Smallest Hamming distance to `target`; pool order breaks ties."""
        best, best_distance = None, None
        for run, vector in zip(self.runs, self.vectors):
            if run.run_id in evaluated:
                continue
            distance = sum(a != b for a, b in zip(vector, target)) + abs(len(vector) - len(target))
            if best_distance is None or distance < best_distance:
                best, best_distance = run, distance
        return best

    def random_unevaluated(self, evaluated: set[str], rng: np.random.Generator):
        left = [r for r in self.runs if r.run_id not in evaluated]
        if not left:
            return None
        return left[int(rng.integers(len(left)))]


# ----------------------------
# evaluation
# ----------------------------
def _objective(
    run: RunRecord,
    decision: ReplayDecision,
    state: SearchState,
    context: ReplayContext,
) -> float:
    """
    Objective in the run's oriented raw units: the true final for completed runs. Stopped
    runs report the predicted final, clamped to [best observed value, mean of earlier
    finals] in normalized space, or just the best observed value without a bank.
    """
    if not decision.stopped_early:
        return run.oriented_final
    partial = run.curve[: decision.stop_epoch]
    best_raw = max(run.oriented(v) for v in partial)
    if context.bank is None:
        return best_raw
    stats = context.stats
    model = context.bank.get(decision.stop_epoch).with_stats(stats)
    predicted = model.predict_final(
        run,
        context=state.normalized_finals(stats),
        best_observed=float(stats.apply(run.dataset_id, partial).max()),
    )
    return run.oriented(stats.range_for(run.dataset_id).denormalize(predicted))


def regularized_evolution(
    runs: Sequence[RunRecord],
    policy: TerminationPolicy,
    config: EvolutionConfig,
    *,
    bank: RankerBank | None = None,
) -> EvolutionResult:
    if policy.is_schedule:
        raise PolicyConfigurationError(f"{policy.name} cannot drive a sequential optimizer")
    if bank is not None and not bank.config.with_final_head:
        raise PolicyConfigurationError(
            "the evolution objective needs a bank trained with the final-performance head"
        )
    pool = RunPool(runs)
    rng = np.random.default_rng(config.seed)
    state = SearchState()
    context = ReplayContext(bank=bank)
    population: deque[Individual] = deque(maxlen=config.population)
    evaluated: set[str] = set()
    trace: list[TracePoint] = []
    best: Individual | None = None

    while len(evaluated) < config.budget:
        if len(population) < config.population:
            run = pool.random_unevaluated(evaluated, rng)
        else:
            picks = rng.choice(len(population), size=config.tournament, replace=False)
            parent = max((population[int(i)] for i in picks), key=lambda ind: ind.objective)
            target = pool.mutate(parent.run, config.mutation_rate, rng)
            run = pool.nearest_unevaluated(target, evaluated)
        if run is None:
            logger.info("Pool exhausted after %s evaluations", len(evaluated))
            break

        decision = replay_policy(run, state, policy, context)
        child = Individual(run, _objective(run, decision, state, context), decision)
        evaluated.add(run.run_id)
        population.append(child)  # the oldest individual ages out
        if best is None or child.objective > best.objective:
            best = child
        trace.append(
            TracePoint(
                evaluation=len(evaluated),
                run_id=run.run_id,
                cumulative_epochs=state.epochs_consumed,
                objective=child.objective,
                terminated=child.terminated,
                incumbent_run_id=best.run.run_id,
                incumbent_objective=best.objective,
            )
        )

    logger.info(
        "Evolution finished: %s evaluations, %s epochs, best %s",
        len(trace),
        state.epochs_consumed,
        best.run.run_id if best else None,
    )
    return EvolutionResult(best, tuple(trace))


__all__ = [
    "EvolutionConfig",
    "Individual",
    "TracePoint",
    "EvolutionResult",
    "RunPool",
    "regularized_evolution",
]
