# apps/corpus/records.py
"""Domain types of the learning-curve corpus."""

from __future__ import annotations

import math
from collections import Counter
from collections.abc import Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np
from django.db import models

from .exceptions import DegenerateDatasetError, UnknownDatasetError

SCHEMA_VERSION = 1


class MetricOrientation(models.TextChoices):
    HIGHER_BETTER = "higher_better", "Higher is better"
    LOWER_BETTER = "lower_better", "Lower is better"


@dataclass(frozen=True, eq=True)
class RunRecord:
    """One training run: its model description and the full learning curve y_1..y_L."""

    dataset_id: str
    run_id: str
    arch_tokens: tuple[str, ...]
    hparams: Mapping[str, float]
    curve: tuple[float, ...]
    metric_orientation: str = MetricOrientation.HIGHER_BETTER

    __hash__ = None  # hparams is a mapping

    @property
    def length(self) -> int:
        return len(self.curve)

    @property
    def final(self) -> float:
        return self.curve[-1]

    @property
    def higher_is_better(self) -> bool:
        return self.metric_orientation == MetricOrientation.HIGHER_BETTER

    def oriented(self, value: float) -> float:
        """Map a raw value so that larger always means better."""
        return value if self.higher_is_better else -value

    @property
    def oriented_final(self) -> float:
        return self.oriented(self.final)


def build_vocabulary(records: Iterable[RunRecord]) -> dict[str, int]:
    """Most frequent token first; ties broken lexicographically."""
    counts = Counter(token for r in records for token in r.arch_tokens)
    ordered = sorted(counts, key=lambda token: (-counts[token], token))
    return {token: i for i, token in enumerate(ordered)}


def ordered_dataset_ids(records: Iterable[RunRecord]) -> tuple[str, ...]:
    return tuple(dict.fromkeys(r.dataset_id for r in records))


@dataclass(frozen=True)
class Corpus:
    records: tuple[RunRecord, ...]
    vocabulary: Mapping[str, int]
    dataset_ids: tuple[str, ...]
    schema_version: int = SCHEMA_VERSION

    @classmethod
    def from_records(cls, records: Sequence[RunRecord]) -> Corpus:
        from .services import validate_records  # local import to avoid circulars

        records = tuple(records)
        validate_records(records)
        return cls(
            records=records,
            vocabulary=build_vocabulary(records),
            dataset_ids=ordered_dataset_ids(records),
        )

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[RunRecord]:
        return iter(self.records)

    def for_dataset(self, dataset_id: str) -> tuple[RunRecord, ...]:
        if dataset_id not in self.dataset_ids:
            raise UnknownDatasetError(dataset_id)
        return tuple(r for r in self.records if r.dataset_id == dataset_id)

    def get(self, run_id: str) -> RunRecord:
        for r in self.records:
            if r.run_id == run_id:
                return r
        raise KeyError(run_id)


# ---------- normalization ----------
@dataclass(frozen=True)
class DatasetRange:
    min_value: float
    max_value: float
    orientation: str = MetricOrientation.HIGHER_BETTER

    @property
    def degenerate(self) -> bool:
        return not self.max_value > self.min_value

    def denormalize(self, scaled: float) -> float:
        """Raw metric value whose normalized score is `scaled`."""
        span = self.max_value - self.min_value
        if self.orientation == MetricOrientation.LOWER_BETTER:
            return self.max_value - scaled * span
        return self.min_value + scaled * span

    def widened(self, values: Iterable[float]) -> DatasetRange:
        finite = [v for v in values if math.isfinite(v)]
        if not finite:
            return self
        return DatasetRange(
            min(self.min_value, *finite), max(self.max_value, *finite), self.orientation
        )


@dataclass(frozen=True)
class NormalizationStats:
    """Per-dataset min/max of observed curve values, plus each dataset's orientation."""

    ranges: Mapping[str, DatasetRange] = field(default_factory=dict)

    @classmethod
    def from_records(cls, records: Iterable[RunRecord]) -> NormalizationStats:
        ranges: dict[str, DatasetRange] = {}
        for r in records:
            finite = [v for v in r.curve if math.isfinite(v)]
            if not finite:
                continue
            current = ranges.get(r.dataset_id)
            if current is None:
                ranges[r.dataset_id] = DatasetRange(min(finite), max(finite), r.metric_orientation)
            else:
                ranges[r.dataset_id] = current.widened(finite)
        return cls(ranges)

    def __contains__(self, dataset_id: str) -> bool:
        return dataset_id in self.ranges

    def range_for(self, dataset_id: str) -> DatasetRange:
        try:
            return self.ranges[dataset_id]
        except KeyError:
            raise UnknownDatasetError(dataset_id) from None

    def extended(
        self,
        dataset_id: str,
        values: Iterable[float],
        orientation: str = MetricOrientation.HIGHER_BETTER,
    ) -> NormalizationStats:
        """Stats with `values` folded into `dataset_id`'s range (registering it if new)."""
        values = [v for v in values if math.isfinite(v)]
        ranges = dict(self.ranges)
        current = ranges.get(dataset_id)
        if current is None:
            if not values:
                return self
            ranges[dataset_id] = DatasetRange(min(values), max(values), orientation)
        else:
            ranges[dataset_id] = current.widened(values)
        return NormalizationStats(ranges)

    def apply(self, dataset_id: str, values: Sequence[float]) -> np.ndarray:
        rng = self.range_for(dataset_id)
        if rng.degenerate:
            raise DegenerateDatasetError(dataset_id)
        scaled = (np.asarray(values, dtype=np.float64) - rng.min_value) / (
            rng.max_value - rng.min_value
        )
        if rng.orientation == MetricOrientation.LOWER_BETTER:
            scaled = 1.0 - scaled
        return np.clip(scaled, 0.0, 1.0)

    def to_dict(self) -> dict:
        return {
            k: {"min": v.min_value, "max": v.max_value, "orientation": str(v.orientation)}
            for k, v in self.ranges.items()
        }

    @classmethod
    def from_dict(cls, payload: Mapping) -> NormalizationStats:
        return cls(
            {
                k: DatasetRange(float(v["min"]), float(v["max"]), v["orientation"])
                for k, v in payload.items()
            }
        )


__all__ = [
    "SCHEMA_VERSION",
    "MetricOrientation",
    "RunRecord",
    "Corpus",
    "DatasetRange",
    "NormalizationStats",
    "build_vocabulary",
    "ordered_dataset_ids",
]
