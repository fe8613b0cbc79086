# apps/ranker/features.py
"""Turning run records into the numeric inputs of the ranking model."""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field, replace

import numpy as np

from apps.core.exceptions import ConfigurationError
from apps.corpus.exceptions import TruncationRangeError
from apps.corpus.records import NormalizationStats, RunRecord, build_vocabulary
from apps.corpus.services import normalize, normalized_final

from .config import ModelConfig
from .exceptions import UnknownTokenError


@dataclass(frozen=True)
class EncodedInput:
    """One model description x plus its partial curve, ready for scoring."""

    run_id: str
    dataset_id: str
    curve: np.ndarray  # normalized, length l
    tokens: tuple[int, ...]
    hparams: np.ndarray

    @property
    def length(self) -> int:
        return int(self.curve.shape[0])


@dataclass(frozen=True)
class EncodedBatch:
    run_ids: tuple[str, ...]
    dataset_ids: tuple[str, ...]
    curves: np.ndarray  # [batch x l]
    tokens: np.ndarray  # [batch x steps], padded with 0
    mask: np.ndarray  # [batch x steps], 1.0 where a real token sits
    hparams: np.ndarray  # [batch x n_hparams]

    @property
    def size(self) -> int:
        return len(self.run_ids)

    @property
    def length(self) -> int:
        return int(self.curves.shape[1])

    @classmethod
    def from_inputs(cls, inputs: Sequence[EncodedInput]) -> EncodedBatch:
        if not inputs:
            raise ConfigurationError("cannot batch zero inputs")
        lengths = {x.length for x in inputs}
        if len(lengths) != 1:
            raise ConfigurationError(f"inputs mix curve lengths {sorted(lengths)}")
        steps = max(len(x.tokens) for x in inputs)
        tokens = np.zeros((len(inputs), steps), dtype=np.int64)
        mask = np.zeros((len(inputs), steps))
        for row, x in enumerate(inputs):
            tokens[row, : len(x.tokens)] = x.tokens
            mask[row, : len(x.tokens)] = 1.0
        return cls(
            run_ids=tuple(x.run_id for x in inputs),
            dataset_ids=tuple(x.dataset_id for x in inputs),
            curves=np.stack([x.curve for x in inputs]),
            tokens=tokens,
            mask=mask,
            hparams=np.stack([x.hparams for x in inputs]),
        )

    def select(self, rows: Sequence[int]) -> EncodedBatch:
        rows = list(rows)
        return EncodedBatch(
            run_ids=tuple(self.run_ids[i] for i in rows),
            dataset_ids=tuple(self.dataset_ids[i] for i in rows),
            curves=self.curves[rows],
            tokens=self.tokens[rows],
            mask=self.mask[rows],
            hparams=self.hparams[rows],
        )


@dataclass(frozen=True)
class FeatureSpace:
    """
    Everything needed to encode a record the same way at training and at inference time:
    token vocabulary, hyperparameter layout and standardization, curve normalization stats.
    """

    vocabulary: Mapping[str, int]
    hparam_names: tuple[str, ...]
    log_hparams: tuple[str, ...] = ()
    hparam_mean: tuple[float, ...] = ()
    hparam_scale: tuple[float, ...] = ()
    stats: NormalizationStats = field(default_factory=NormalizationStats)

    @classmethod
    def fit(
        cls,
        records: Sequence[RunRecord],
        config: ModelConfig,
        *,
        stats: NormalizationStats | None = None,
        vocabulary: Mapping[str, int] | None = None,
    ) -> FeatureSpace:
        if not records:
            raise ConfigurationError("cannot fit a feature space on zero records")
        names = tuple(records[0].hparams)
        log_names = tuple(n for n in config.log_hparams if n in names)
        space = cls(
            vocabulary=dict(vocabulary) if vocabulary is not None else build_vocabulary(records),
            hparam_names=names,
            log_hparams=log_names,
            stats=stats if stats is not None else NormalizationStats.from_records(records),
        )
        raw = np.stack([space.raw_hparams(r) for r in records])
        mean = raw.mean(axis=0)
        std = raw.std(axis=0)
        scale = np.where(std > 0, std, 1.0)
        return replace(space, hparam_mean=tuple(mean.tolist()), hparam_scale=tuple(scale.tolist()))

    # ---------- vocabulary ----------
    @property
    def vocab_size(self) -> int:
        return len(self.vocabulary)

    @property
    def start_token(self) -> int:
        """Row of the embedding table reserved for the decoder's start symbol."""
        return len(self.vocabulary)

    def token_indices(self, record: RunRecord) -> tuple[int, ...]:
        try:
            return tuple(self.vocabulary[t] for t in record.arch_tokens)
        except KeyError as exc:
            raise UnknownTokenError(exc.args[0], record.run_id) from None

    # ---------- hyperparameters ----------
    @property
    def n_hparams(self) -> int:
        return len(self.hparam_names)

    def raw_hparams(self, record: RunRecord) -> np.ndarray:
        values = []
        for name in self.hparam_names:
            if name not in record.hparams:
                raise ConfigurationError(f"run {record.run_id!r} lacks hyperparameter {name!r}")
            value = float(record.hparams[name])
            if name in self.log_hparams:
                if value <= 0:
                    raise ConfigurationError(
                        f"hyperparameter {name!r} of run {record.run_id!r} must be positive"
                    )
                value = float(np.log(value))
            values.append(value)
        return np.array(values, dtype=np.float64)

    def hparam_vector(self, record: RunRecord) -> np.ndarray:
        raw = self.raw_hparams(record)
        if not self.hparam_mean:
            return raw
        return (raw - np.array(self.hparam_mean)) / np.array(self.hparam_scale)

    # ---------- curves ----------
    def with_stats(self, stats: NormalizationStats) -> FeatureSpace:
        return replace(self, stats=stats)

    def final_value(self, record: RunRecord) -> float:
        """Final performance in normalized higher-better units."""
        return normalized_final(self.stats, record)

    def encode(self, record: RunRecord, l: int) -> EncodedInput:  # noqa: E741
        return EncodedInput(
            run_id=record.run_id,
            dataset_id=record.dataset_id,
            curve=normalize(None, self.stats, record, l),
            tokens=self.token_indices(record),
            hparams=self.hparam_vector(record),
        )

    def encode_tail(self, record: RunRecord, l: int) -> EncodedInput:  # noqa: E741
        """Like `encode`, but with the last `l` epochs of the completed curve."""
        if not 0 <= l <= record.length:
            raise TruncationRangeError(
                f"length {l} outside [0, {record.length}] for run {record.run_id!r}"
            )
        curve = record.curve[record.length - l :] if l else ()
        return EncodedInput(
            run_id=record.run_id,
            dataset_id=record.dataset_id,
            curve=self.stats.apply(record.dataset_id, curve) if curve else np.zeros(0),
            tokens=self.token_indices(record),
            hparams=self.hparam_vector(record),
        )

    def encode_many(self, records: Sequence[RunRecord], l: int) -> EncodedBatch:  # noqa: E741
        return EncodedBatch.from_inputs([self.encode(r, l) for r in records])

    # ---------- persistence ----------
    def to_dict(self) -> dict:
        return {
            "vocabulary": dict(self.vocabulary),
            "hparam_names": list(self.hparam_names),
            "log_hparams": list(self.log_hparams),
            "hparam_mean": list(self.hparam_mean),
            "hparam_scale": list(self.hparam_scale),
            "normalization": self.stats.to_dict(),
        }

    @classmethod
    def from_dict(cls, payload: Mapping) -> FeatureSpace:
        return cls(
            vocabulary={str(k): int(v) for k, v in payload["vocabulary"].items()},
            hparam_names=tuple(payload["hparam_names"]),
            log_hparams=tuple(payload["log_hparams"]),
            hparam_mean=tuple(float(v) for v in payload["hparam_mean"]),
            hparam_scale=tuple(float(v) for v in payload["hparam_scale"]),
            stats=NormalizationStats.from_dict(payload["normalization"]),
        )


__all__ = ["EncodedInput", "EncodedBatch", "FeatureSpace"]
