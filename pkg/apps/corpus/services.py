# apps/corpus/services.py
from __future__ import annotations

import json
import logging
import math
from collections.abc import Iterable, Mapping, Sequence
from pathlib import Path

import numpy as np

from .exceptions import (
    CorpusIOError,
    CorpusValidationError,
    DuplicateRunError,
    EmptyCorpusError,
    SchemaVersionError,
    TruncationRangeError,
    UnknownDatasetError,
)
from .records import SCHEMA_VERSION, Corpus, MetricOrientation, NormalizationStats, RunRecord

logger = logging.getLogger(__name__)

RECORD_FIELDS = ("dataset_id", "run_id", "arch_tokens", "hparams", "curve", "metric_orientation")


# ----------------------------
# validation
# ----------------------------
def validate_record(record: RunRecord, *, line: int | None = None) -> None:
    def fail(message: str):
        raise CorpusValidationError(message, run_id=record.run_id, line=line)

    if not record.dataset_id:
        fail("dataset_id is empty")
    if not record.curve:
        fail("curve is empty (L must be >= 1)")
    if not all(math.isfinite(v) for v in record.curve):
        fail("curve contains non-finite values")
    if not record.arch_tokens:
        fail("arch_tokens is empty")
    if not all(isinstance(t, str) and t for t in record.arch_tokens):
        fail("arch_tokens must be non-empty strings")
    if record.metric_orientation not in MetricOrientation.values:
        fail(f"unknown metric_orientation {record.metric_orientation!r}")
    if not all(math.isfinite(v) for v in record.hparams.values()):
        fail("hparams contain non-finite values")


def validate_records(records: Sequence[RunRecord], *, lines: Sequence[int] | None = None) -> None:
    """Check every RunRecord invariant plus corpus-level uniqueness and hparam layout."""
    if not records:
        raise EmptyCorpusError()
    seen: set[str] = set()
    keys: tuple[str, ...] | None = None
    for n, record in enumerate(records):
        line = lines[n] if lines is not None else None
        validate_record(record, line=line)
        if record.run_id in seen:
            raise DuplicateRunError("duplicate run_id", run_id=record.run_id, line=line)
        seen.add(record.run_id)
        record_keys = tuple(record.hparams)
        if keys is None:
            keys = record_keys
        elif record_keys != keys:
            raise CorpusValidationError(
                f"hparams keys {list(record_keys)} differ from {list(keys)}",
                run_id=record.run_id,
                line=line,
            )


# ----------------------------
# JSON Lines I/O
# ----------------------------
def record_to_dict(record: RunRecord) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "dataset_id": record.dataset_id,
        "run_id": record.run_id,
        "arch_tokens": list(record.arch_tokens),
        "hparams": {k: float(v) for k, v in record.hparams.items()},
        "curve": [float(v) for v in record.curve],
        "metric_orientation": str(record.metric_orientation),
    }


def record_from_dict(payload: Mapping, *, line: int | None = None) -> RunRecord:
    if not isinstance(payload, Mapping):
        raise CorpusValidationError("record must be a JSON object", line=line)
    run_id = payload.get("run_id")
    version = payload.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise SchemaVersionError(
            f"unknown schema_version {version!r} (expected {SCHEMA_VERSION})",
            run_id=run_id,
            line=line,
        )
    missing = [f for f in RECORD_FIELDS if f not in payload]
    if missing:
        raise CorpusValidationError(f"missing fields {missing}", run_id=run_id, line=line)
    if not isinstance(payload["arch_tokens"], list):
        raise CorpusValidationError("arch_tokens must be a JSON array", run_id=run_id, line=line)
    try:
        return RunRecord(
            dataset_id=str(payload["dataset_id"]),
            run_id=str(payload["run_id"]),
            arch_tokens=tuple(payload["arch_tokens"]),
            hparams={str(k): float(v) for k, v in payload["hparams"].items()},
            curve=tuple(float(v) for v in payload["curve"]),
            metric_orientation=str(payload["metric_orientation"]),
        )
    except (TypeError, ValueError, AttributeError) as exc:
        raise CorpusValidationError(f"malformed field: {exc}", run_id=run_id, line=line) from exc


def load_jsonl(path: str | Path) -> Corpus:
    path = Path(path)
    records: list[RunRecord] = []
    lines: list[int] = []
    try:
        with path.open("r", encoding="utf-8") as fh:
            for number, raw in enumerate(fh, start=1):
                if not raw.strip():
                    continue
                try:
                    payload = json.loads(raw)
                except json.JSONDecodeError as exc:
                    raise CorpusValidationError(f"malformed JSON: {exc.msg}", line=number) from exc
                records.append(record_from_dict(payload, line=number))
                lines.append(number)
    except OSError as exc:
        raise CorpusIOError(f"cannot read corpus {path}: {exc}") from exc

    validate_records(records, lines=lines)
    corpus = Corpus.from_records(records)
    logger.info(
        "Loaded corpus %s: %s records, %s datasets", path, len(corpus), len(corpus.dataset_ids)
    )
    return corpus


def encode_json(value) -> str:
    """JSON text with every float written as `.17g`, enough digits to round-trip bit-exactly."""
    if isinstance(value, float):
        if not math.isfinite(value):
            raise CorpusValidationError(f"cannot write non-finite value {value!r}")
        return format(value, ".17g")
    if isinstance(value, Mapping):
        items = (f"{json.dumps(str(k))}: {encode_json(v)}" for k, v in value.items())
        return "{" + ", ".join(items) + "}"
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(encode_json(v) for v in value) + "]"
    return json.dumps(value)


def save_jsonl(corpus: Corpus, path: str | Path) -> Path:
    path = Path(path)
    body = "".join(encode_json(record_to_dict(r)) + "\n" for r in corpus.records)
    try:
        if path.parent and not path.parent.exists():
            path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(body, encoding="utf-8")
    except OSError as exc:
        raise CorpusIOError(f"cannot write corpus {path}: {exc}") from exc
    logger.info("Saved %s records to %s", len(corpus), path)
    return path


# ----------------------------
# curve access
# ----------------------------
def truncate(record: RunRecord, l: int) -> tuple[float, ...]:  # noqa: E741
    """The partial curve y_1..y_l; l = 0 is the architecture-only case."""
    if not 0 <= l <= record.length:
        raise TruncationRangeError(
            f"length {l} outside [0, {record.length}] for run {record.run_id!r}"
        )
    return record.curve[:l]


def normalize(
    corpus: Corpus | None, stats: NormalizationStats, record: RunRecord, l: int  # noqa: E741
) -> np.ndarray:
    """Partial curve of `record` scaled into [0, 1] with higher meaning better."""
    if corpus is not None and record.dataset_id not in corpus.dataset_ids:
        if record.dataset_id not in stats:
            raise UnknownDatasetError(record.dataset_id)
    partial = truncate(record, l)
    if not partial:
        return np.zeros(0)
    return stats.apply(record.dataset_id, partial)


def normalized_final(stats: NormalizationStats, record: RunRecord) -> float:
    return float(stats.apply(record.dataset_id, [record.final])[0])


# ----------------------------
# splitting
# ----------------------------
def lodo_split(
    corpus: Corpus, held_out: str
) -> tuple[tuple[RunRecord, ...], tuple[RunRecord, ...]]:
    if held_out not in corpus.dataset_ids:
        raise UnknownDatasetError(held_out)
    train = tuple(r for r in corpus.records if r.dataset_id != held_out)
    test = tuple(r for r in corpus.records if r.dataset_id == held_out)
    return train, test


def group_by_dataset(records: Iterable[RunRecord]) -> dict[str, list[RunRecord]]:
    groups: dict[str, list[RunRecord]] = {}
    for r in records:
        groups.setdefault(r.dataset_id, []).append(r)
    return groups


__all__ = [
    "validate_record",
    "validate_records",
    "record_to_dict",
    "record_from_dict",
    "load_jsonl",
    "encode_json",
    "save_jsonl",
    "truncate",
    "normalize",
    "normalized_final",
    "lodo_split",
    "group_by_dataset",
]
