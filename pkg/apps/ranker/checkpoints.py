# apps/ranker/checkpoints.py
"""
JSON checkpoints of trained ranking models.

Floats are written with their shortest round-tripping repr, so a reloaded model scores
bit-identically to the one that was saved.
"""

from __future__ import annotations

import json
import logging
from collections.abc import Iterable, Mapping
from pathlib import Path

from .config import ModelConfig
from .exceptions import CheckpointError
from .features import FeatureSpace
from .params import RankerParams
from .training import RankingModel, TrainingMetrics

logger = logging.getLogger(__name__)

CHECKPOINT_SCHEMA_VERSION = 1
MANIFEST_NAME = "manifest.json"


def checkpoint_name(length: int) -> str:
    return f"f_{length:04d}.json"


def _write_json(path: Path, payload: Mapping) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(payload, allow_nan=False, sort_keys=True), encoding="utf-8")
    except (OSError, ValueError) as exc:
        raise CheckpointError(f"cannot write {path}: {exc}") from exc
    return path


def _read_json(path: Path) -> dict:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise CheckpointError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"{path} is not valid JSON: {exc.msg}") from exc
    version = payload.get("schema_version") if isinstance(payload, dict) else None
    if version != CHECKPOINT_SCHEMA_VERSION:
        raise CheckpointError(f"{path}: unsupported schema_version {version!r}")
    return payload


# ----------------------------
# single models
# ----------------------------
def model_to_payload(model: RankingModel) -> dict:
    last = model.metrics.last
    return {
        "schema_version": CHECKPOINT_SCHEMA_VERSION,
        "length": model.length,
        "config": model.config.to_dict(),
        "features": model.features.to_dict(),
        "params": model.params.to_payload(),
        "trained_steps": len(model.metrics),
        "last_losses": (
            {"ce": last.ce, "rec": last.rec, "perf": last.perf, "total": last.total}
            if last
            else None
        ),
    }


def model_from_payload(payload: Mapping) -> RankingModel:
    try:
        return RankingModel(
            length=int(payload["length"]),
            config=ModelConfig.from_dict(payload["config"]),
            features=FeatureSpace.from_dict(payload["features"]),
            params=RankerParams.from_payload(payload["params"]),
            metrics=TrainingMetrics(),
        )
    except (KeyError, TypeError) as exc:
        raise CheckpointError(f"malformed checkpoint: missing {exc}") from exc


def save_model(model: RankingModel, path: str | Path) -> Path:
    path = _write_json(Path(path), model_to_payload(model))
    logger.info("Saved f_%s checkpoint to %s", model.length, path)
    return path


def load_model(path: str | Path) -> RankingModel:
    return model_from_payload(_read_json(Path(path)))


# ----------------------------
# bank manifests
# ----------------------------
def save_manifest(
    directory: str | Path,
    lengths: Iterable[int],
    *,
    holdout: str | None,
    config: ModelConfig,
) -> Path:
    lengths = sorted(set(int(length) for length in lengths))
    payload = {
        "schema_version": CHECKPOINT_SCHEMA_VERSION,
        "holdout": holdout,
        "lengths": lengths,
        "checkpoints": {str(length): checkpoint_name(length) for length in lengths},
        "config": config.to_dict(),
    }
    return _write_json(Path(directory) / MANIFEST_NAME, payload)


def load_manifest(directory: str | Path) -> dict:
    return _read_json(Path(directory) / MANIFEST_NAME)


__all__ = [
    "CHECKPOINT_SCHEMA_VERSION",
    "MANIFEST_NAME",
    "checkpoint_name",
    "model_to_payload",
    "model_from_payload",
    "save_model",
    "load_model",
    "save_manifest",
    "load_manifest",
]
