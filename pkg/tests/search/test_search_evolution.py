import numpy as np
import pytest

from apps.core.exceptions import ConfigurationError
from apps.corpus.services import lodo_split
from apps.ranker.bank import RankerBank
from apps.search.evolution import EvolutionConfig, RunPool, regularized_evolution
from apps.search.exceptions import InsufficientRunsError
from apps.search.reports import row_from_evolution
from apps.termination.exceptions import PolicyConfigurationError
from apps.termination.policies import PolicyKind, TerminationPolicy

NONE = TerminationPolicy(PolicyKind.NONE)
LAST_VALUE = TerminationPolicy(PolicyKind.LAST_VALUE)


@pytest.fixture
def pool(tiny_corpus):
    _, held = lodo_split(tiny_corpus, "synth-01")
    return held


def exhaustive(**kwargs):
    return EvolutionConfig(
        **{"population": 4, "tournament": 2, "mutation_rate": 0.5, "budget": 12, **kwargs}
    )


def test_exhaustive_search_finds_the_pool_optimum(pool):
    result = regularized_evolution(pool, NONE, exhaustive())
    assert result.evaluations == 12
    assert len({p.run_id for p in result.trace}) == 12
    assert result.best.objective == max(r.oriented_final for r in pool)
    assert result.epochs_consumed == 12 * 12
    row = row_from_evolution(result, pool, policy="none", seed=42)
    assert row.regret == 0.0


def test_budget_above_pool_size_stops_when_exhausted(pool):
    result = regularized_evolution(pool, NONE, exhaustive(budget=30))
    assert result.evaluations == len(pool)


def test_same_seed_gives_identical_trace(pool):
    a = regularized_evolution(pool, LAST_VALUE, exhaustive(budget=9, seed=5))
    b = regularized_evolution(pool, LAST_VALUE, exhaustive(budget=9, seed=5))
    assert a.trace == b.trace


def test_incumbent_trace_is_monotone(pool):
    result = regularized_evolution(pool, NONE, exhaustive(budget=10, seed=1))
    incumbents = [p.incumbent_objective for p in result.trace]
    assert incumbents == sorted(incumbents)
    epochs = [p.cumulative_epochs for p in result.trace]
    assert epochs == sorted(epochs)


def test_termination_saves_epochs(pool):
    plain = regularized_evolution(pool, NONE, exhaustive())
    stopped = regularized_evolution(pool, LAST_VALUE, exhaustive())
    assert any(p.terminated for p in stopped.trace)
    assert stopped.epochs_consumed < plain.epochs_consumed


def test_terminated_runs_report_their_best_partial_value_without_a_bank(pool):
    result = regularized_evolution(pool, LAST_VALUE, exhaustive())
    by_id = {r.run_id: r for r in pool}
    for point in result.trace:
        run = by_id[point.run_id]
        if point.terminated:
            assert point.objective <= run.oriented_final
            assert point.objective in {run.oriented(v) for v in run.curve}
        else:
            assert point.objective == run.oriented_final


def test_schedule_policies_are_rejected(pool):
    with pytest.raises(PolicyConfigurationError):
        regularized_evolution(pool, TerminationPolicy(PolicyKind.HYPERBAND), exhaustive())


def test_ranker_objective_needs_the_final_head(pool, tiny_corpus, fast_config):
    train, _ = lodo_split(tiny_corpus, "synth-01")
    bank = RankerBank(fast_config, train_records=train)
    policy = TerminationPolicy(PolicyKind.LCRANKNET)
    with pytest.raises(PolicyConfigurationError, match="final-performance head"):
        regularized_evolution(pool, policy, exhaustive(), bank=bank)
    assert bank.lengths == ()


@pytest.mark.parametrize(
    "kwargs",
    [
        {"tournament": 5, "population": 4},
        {"tournament": 0},
        {"population": 20, "budget": 12},
        {"mutation_rate": 1.5},
    ],
)
def test_invalid_configuration(kwargs):
    with pytest.raises(ConfigurationError):
        exhaustive(**kwargs)


def test_empty_pool():
    with pytest.raises(InsufficientRunsError):
        RunPool([])


# ----------------------------
# pool operations
# ----------------------------
def test_mutation_changes_at_least_one_coordinate(pool):
    space = RunPool(pool)
    rng = np.random.default_rng(0)
    for parent in pool:
        child = space.mutate(parent, 0.0, rng)
        changed = sum(a != b for a, b in zip(child, space.vector(parent)))
        assert changed <= 1
        for i, value in enumerate(child):
            assert value in space.domains[i]


def test_nearest_unevaluated_prefers_exact_matches(pool):
    space = RunPool(pool)
    target = space.vector(pool[3])
    assert space.nearest_unevaluated(target, set()) is pool[3]
    chosen = space.nearest_unevaluated(target, {pool[3].run_id})
    assert chosen is not None and chosen.run_id != pool[3].run_id
    assert space.nearest_unevaluated(target, {r.run_id for r in pool}) is None
