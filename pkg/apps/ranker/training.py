# apps/ranker/training.py
from __future__ import annotations

import logging
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field, replace

import numpy as np

from apps.corpus.records import NormalizationStats, RunRecord
from apps.corpus.services import group_by_dataset
from apps.tensors import AdamState, adam_step, backward

from .config import ModelConfig
from .exceptions import NoValidPairError, TrainingDivergedError
from .features import EncodedBatch, FeatureSpace
from .losses import combined_loss, pair_target_array, reconstruction_accuracy_batch
from .network import clamp_final, final_head_batch, pair_probability, score_batch
from .params import RankerParams

logger = logging.getLogger(__name__)


# ----------------------------
# metrics
# ----------------------------
@dataclass(frozen=True)
class StepMetrics:
    step: int
    ce: float
    rec: float
    perf: float
    total: float


@dataclass(frozen=True)
class TrainingMetrics:
    steps: tuple[StepMetrics, ...] = ()

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def last(self) -> StepMetrics | None:
        return self.steps[-1] if self.steps else None

    def series(self, name: str) -> np.ndarray:
        return np.array([getattr(s, name) for s in self.steps])


# ----------------------------
# trained model f_l
# ----------------------------
@dataclass
class RankingModel:
    """A ranking model trained for one observed curve length."""

    length: int
    config: ModelConfig
    features: FeatureSpace
    params: RankerParams
    metrics: TrainingMetrics = field(default_factory=TrainingMetrics)

    def with_stats(self, stats: NormalizationStats) -> RankingModel:
        """Same weights, different curve normalization (used for datasets revealed online)."""
        return replace(self, features=self.features.with_stats(stats))

    def encode(self, records: Sequence[RunRecord], *, tail: bool = False) -> EncodedBatch:
        if not tail:
            return self.features.encode_many(records, self.length)
        return EncodedBatch.from_inputs(
            [self.features.encode_tail(r, self.length) for r in records]
        )

    def scores(self, records: Sequence[RunRecord]) -> np.ndarray:
        return score_batch(self.encode(records), self.config, self.params)

    def probability(
        self, record: RunRecord, other: RunRecord, *, other_tail: bool = False
    ) -> float:
        """P(record ends better than other) with both seen through the first `length` epochs."""
        f_i = score_batch(self.encode([record]), self.config, self.params)[0]
        f_j = score_batch(self.encode([other], tail=other_tail), self.config, self.params)[0]
        return pair_probability(float(f_i), float(f_j))

    def predict_final(
        self,
        record: RunRecord,
        *,
        context: Sequence[float] = (),
        best_observed: float | None = None,
    ) -> float:
        batch = self.encode([record])
        raw = float(final_head_batch(batch, self.config, self.params)[0])
        if not len(context):
            return raw
        if best_observed is None and batch.length:
            best_observed = float(batch.curves.max())
        return clamp_final(raw, best_observed, float(np.mean(context)))

    def reconstruction_accuracy(self, records: Sequence[RunRecord]) -> float:
        batch = self.encode(records)
        return reconstruction_accuracy_batch(
            batch, self.config, self.params, self.features.start_token
        )


def reconstruction_accuracy(model: RankingModel, records: Sequence[RunRecord]) -> float:
    """Teacher-forced token-level argmax accuracy of the architecture decoder."""
    return model.reconstruction_accuracy(records)


# ----------------------------
# pair sampling
# ----------------------------
@dataclass(frozen=True)
class PairSampler:
    """Uniform sampling of ordered pairs (i != j) from the allowed groups of runs."""

    groups: tuple[np.ndarray, ...]

    @classmethod
    def build(cls, records: Sequence[RunRecord], *, cross_dataset: bool) -> PairSampler:
        if cross_dataset:
            candidates = [np.arange(len(records))]
        else:
            candidates = [np.array(rows) for rows in _dataset_rows(records).values()]
        groups = tuple(g for g in candidates if len(g) >= 2)
        if not groups:
            raise NoValidPairError("no dataset has at least two training runs")
        return cls(groups)

    @property
    def pair_count(self) -> int:
        return sum(len(g) * (len(g) - 1) for g in self.groups)

    def sample(self, rng: np.random.Generator, size: int) -> tuple[np.ndarray, np.ndarray]:
        sizes = np.array([len(g) for g in self.groups], dtype=np.float64)
        weights = sizes * (sizes - 1)
        which = rng.choice(len(self.groups), size=size, p=weights / weights.sum())
        first = np.empty(size, dtype=np.int64)
        second = np.empty(size, dtype=np.int64)
        for n, g in enumerate(which):
            members = self.groups[g]
            i = int(rng.integers(0, len(members)))
            j = int(rng.integers(0, len(members) - 1))
            j += j >= i
            first[n], second[n] = members[i], members[j]
        return first, second


# ----------------------------
# training
# ----------------------------
def train_fl(
    records: Sequence[RunRecord],
    l: int,  # noqa: E741
    config: ModelConfig,
    *,
    features: FeatureSpace | None = None,
    vocabulary: Mapping[str, int] | None = None,
    stats: NormalizationStats | None = None,
) -> RankingModel:
    """
    Train the ranking model for curve length `l` on `records`.

    Every record is read only through its first `l` epochs and its final value. Pairs are
    drawn within one dataset unless `config.cross_dataset_pairs` is set.
    """
    records = list(records)
    sampler = PairSampler.build(records, cross_dataset=config.cross_dataset_pairs)
    if features is None:
        features = FeatureSpace.fit(records, config, stats=stats, vocabulary=vocabulary)
    encoded = features.encode_many(records, l)
    finals = np.array([features.final_value(r) for r in records])
    params = RankerParams.initialize(
        config,
        vocab_size=features.vocab_size,
        n_hparams=features.n_hparams,
        dataset_ids=group_by_dataset(records),
    )
    adam = AdamState.initial(params.arrays, learning_rate=config.learning_rate)
    rng = np.random.default_rng([config.seed, l])
    logger.info(
        "Training f_%s on %s runs (%s datasets, %s ordered pairs) for %s steps",
        l,
        len(records),
        len(params.dataset_index),
        sampler.pair_count,
        config.steps,
    )

    history: list[StepMetrics] = []
    for step in range(1, config.steps + 1):
        first, second = sampler.sample(rng, config.pairs_per_step)
        rows, inverse = np.unique(np.concatenate([first, second]), return_inverse=True)
        pair_i, pair_j = inverse[: len(first)], inverse[len(first) :]
        batch = encoded.select(rows)
        w = params.tensors(requires_grad=True)
        losses = combined_loss(
            batch,
            pair_i,
            pair_j,
            pair_target_array(finals[first], finals[second]),
            finals[rows],
            config,
            params,
            w,
            features.start_token,
        )
        values = losses.values()
        if not all(math.isfinite(v) for v in values.values()):
            raise TrainingDivergedError(step, values)
        grads = backward(losses.total, w)
        arrays, adam = adam_step(params.arrays, grads, adam)
        params = params.with_arrays(arrays)
        if not params.all_finite():
            raise TrainingDivergedError(step, values)
        history.append(StepMetrics(step=step, **values))
        if step % config.log_every == 0 or step == config.steps:
            logger.info(
                "f_%s step %s/%s: total=%.5f ce=%.5f rec=%.5f perf=%.5f",
                l,
                step,
                config.steps,
                values["total"],
                values["ce"],
                values["rec"],
                values["perf"],
            )

    return RankingModel(
        length=l,
        config=config,
        features=features,
        params=params,
        metrics=TrainingMetrics(tuple(history)),
    )


def pair_accuracy(model: RankingModel, records: Sequence[RunRecord]) -> float:
    """Share of same-dataset ordered pairs with distinct finals that the scores order correctly."""
    scores = model.scores(records)
    finals = np.array([model.features.final_value(r) for r in records])
    hits = total = 0
    for rows in _dataset_rows(records).values():
        for a in rows:
            for b in rows:
                if a == b or finals[a] == finals[b]:
                    continue
                total += 1
                hits += (scores[a] > scores[b]) == (finals[a] > finals[b])
    return hits / total if total else 1.0


def _dataset_rows(records: Sequence[RunRecord]) -> dict[str, list[int]]:
    rows: dict[str, list[int]] = {}
    for n, r in enumerate(records):
        rows.setdefault(r.dataset_id, []).append(n)
    return rows


__all__ = [
    "StepMetrics",
    "TrainingMetrics",
    "RankingModel",
    "PairSampler",
    "train_fl",
    "reconstruction_accuracy",
    "pair_accuracy",
]
