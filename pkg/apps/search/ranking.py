# apps/search/ranking.py
"""
Ranking quality against observed curve length.

Each repetition draws test and training runs from the held-out dataset, fits one ranker
per length on the other datasets plus the in-dataset training runs, and correlates the
ranker's scores for the test runs with their true final values.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from django.db import models

from apps.corpus.records import Corpus, RunRecord
from apps.corpus.services import lodo_split, truncate
from apps.ranker.config import ModelConfig
from apps.ranker.training import train_fl

from .exceptions import InsufficientRunsError, UndefinedCorrelationError
from .stats import mean_and_sd, spearman

logger = logging.getLogger(__name__)

DEFAULT_TEST_RUNS = 50
DEFAULT_TRAIN_RUNS = 5
DEFAULT_REPETITIONS = 10
LENGTH_FRACTIONS = tuple(round(0.03 * i, 2) for i in range(11))


class Scorer(models.TextChoices):
    LCRANKNET = "lcranknet", "Trained ranker"
    LAST_VALUE = "last_value", "Last observed value"
    ORACLE = "oracle", "True final value"
    RANDOM = "random", "Uniform noise"
    CONSTANT = "constant", "Constant score"


# ----------------------------
# results
# ----------------------------
@dataclass(frozen=True)
class LengthPoint:
    fraction: float
    length: int
    values: tuple[float | None, ...]  # one per seed; None where undefined

    @property
    def correlations(self) -> tuple[float, ...]:
        return tuple(v for v in self.values if v is not None)

    @property
    def skipped(self) -> int:
        return sum(v is None for v in self.values)

    @property
    def mean(self) -> float:
        return mean_and_sd(self.correlations)[0]

    @property
    def sd(self) -> float:
        return mean_and_sd(self.correlations)[1]

    @property
    def defined(self) -> bool:
        return bool(self.correlations)


@dataclass(frozen=True)
class RankingEvalResult:
    dataset_id: str
    scorer: str
    seeds: tuple[int, ...]
    points: tuple[LengthPoint, ...]

    def point(self, fraction: float) -> LengthPoint:
        for p in self.points:
            if math.isclose(p.fraction, fraction):
                return p
        raise KeyError(fraction)

    def mean_at(self, fraction: float) -> float:
        return self.point(fraction).mean

    def per_seed(self) -> list[tuple[int, LengthPoint, float | None]]:
        """(seed, point, correlation) triples; None where the correlation was undefined."""
        return [(seed, p, v) for p in self.points for seed, v in zip(self.seeds, p.values)]


# ----------------------------
# scoring
# ----------------------------
def length_for(fraction: float, epochs: int) -> int:
    return int(math.floor(fraction * epochs + 1e-9))


def _true_finals(runs: Sequence[RunRecord]) -> np.ndarray:
    return np.array([r.oriented_final for r in runs])


def _pointwise_scores(
    scorer: str, runs: Sequence[RunRecord], length: int, seed: int
) -> np.ndarray:
    if scorer == Scorer.ORACLE:
        return _true_finals(runs)
    if scorer == Scorer.CONSTANT:
        return np.zeros(len(runs))
    if scorer == Scorer.RANDOM:
        return np.random.default_rng([seed, length]).random(len(runs))
    if scorer == Scorer.LAST_VALUE:
        if length == 0:
            return np.zeros(len(runs))
        return np.array([r.oriented(truncate(r, length)[-1]) for r in runs])
    raise ValueError(f"{scorer!r} is not a pointwise scorer")


def _split(held_runs: Sequence[RunRecord], seed: int, n_test: int, n_train: int):
    order = np.random.default_rng(seed).permutation(len(held_runs))
    test = [held_runs[i] for i in order[:n_test]]
    train = [held_runs[i] for i in order[n_test : n_test + n_train]]
    return test, train


# ----------------------------
# protocol
# ----------------------------
def ranking_experiment(
    corpus: Corpus,
    held_out: str,
    config: ModelConfig,
    seeds: Sequence[int],
    *,
    scorer: str = Scorer.LCRANKNET,
    n_test: int = DEFAULT_TEST_RUNS,
    n_train: int = DEFAULT_TRAIN_RUNS,
    fractions: Sequence[float] = LENGTH_FRACTIONS,
) -> RankingEvalResult:
    if scorer not in Scorer.values:
        raise ValueError(f"unknown scorer {scorer!r}")
    meta, held_runs = lodo_split(corpus, held_out)
    if len(held_runs) < n_test + n_train:
        raise InsufficientRunsError(
            f"dataset {held_out!r} has {len(held_runs)} runs, needs {n_test + n_train}"
        )
    epochs = min(r.length for r in held_runs)
    lengths = [length_for(f, epochs) for f in fractions]
    collected: dict[int, list[float | None]] = {i: [] for i in range(len(fractions))}

    for seed in seeds:
        test, train = _split(held_runs, seed, n_test, n_train)
        truth = _true_finals(test)
        for i, length in enumerate(lengths):
            if scorer == Scorer.LCRANKNET:
                model = train_fl([*meta, *train], length, config.with_overrides(seed=seed))
                scores = model.scores(test)
            else:
                scores = _pointwise_scores(scorer, test, length, seed)
            try:
                collected[i].append(spearman(scores, truth))
            except UndefinedCorrelationError:
                collected[i].append(None)
                logger.warning(
                    "Undefined correlation for %s at length %s (seed %s); point skipped",
                    scorer,
                    length,
                    seed,
                )
        logger.info("Ranking repetition with seed %s done (%s)", seed, scorer)

    points = tuple(
        LengthPoint(float(f), lengths[i], tuple(collected[i]))
        for i, f in enumerate(fractions)
    )
    return RankingEvalResult(held_out, str(scorer), tuple(seeds), points)


__all__ = [
    "Scorer",
    "LengthPoint",
    "RankingEvalResult",
    "LENGTH_FRACTIONS",
    "length_for",
    "ranking_experiment",
]
