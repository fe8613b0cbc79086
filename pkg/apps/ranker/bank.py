# apps/ranker/bank.py
from __future__ import annotations

import logging
from collections.abc import Iterable, Sequence
from pathlib import Path

from apps.corpus.records import RunRecord

from .checkpoints import checkpoint_name, load_manifest, load_model, save_manifest, save_model
from .config import ModelConfig
from .exceptions import MissingModelError
from .features import FeatureSpace
from .training import RankingModel, train_fl

logger = logging.getLogger(__name__)


def cadence_grid(length: int, cadence: int) -> tuple[int, ...]:
    """Decision points strictly inside a run of `length` epochs: cadence, 2*cadence, ..."""
    if cadence < 1:
        return ()
    return tuple(range(cadence, length, cadence))


class RankerBank:
    """
    The f_l family: one ranking model per observed curve length.

    With training records attached, missing lengths are trained on first use and cached;
    a bank loaded from disk only serves the lengths it holds.
    """

    def __init__(
        self,
        config: ModelConfig,
        *,
        train_records: Sequence[RunRecord] | None = None,
        features: FeatureSpace | None = None,
        models: dict[int, RankingModel] | None = None,
    ):
        self.config = config
        self.train_records = tuple(train_records) if train_records is not None else None
        self.features = features
        self.models: dict[int, RankingModel] = dict(models or {})
        self.source = ""
        self.holdout: str | None = None

    @property
    def lengths(self) -> tuple[int, ...]:
        return tuple(sorted(self.models))

    @property
    def trainable(self) -> bool:
        return self.train_records is not None

    def __contains__(self, length: int) -> bool:
        return length in self.models

    def get(self, length: int) -> RankingModel:
        model = self.models.get(length)
        if model is not None:
            return model
        if not self.trainable:
            raise MissingModelError(length, self.source)
        logger.info("Training missing f_%s on demand", length)
        model = train_fl(self.train_records, length, self.config, features=self.features)
        if self.features is None:
            self.features = model.features
        self.models[length] = model
        return model

    def train(self, lengths: Iterable[int]) -> list[RankingModel]:
        return [self.get(length) for length in sorted(set(lengths))]

    # ---------- persistence ----------
    def save(self, directory: str | Path, *, holdout: str | None = None) -> Path:
        directory = Path(directory)
        for length, model in sorted(self.models.items()):
            save_model(model, directory / checkpoint_name(length))
        manifest = save_manifest(directory, self.models, holdout=holdout, config=self.config)
        logger.info("Wrote %s checkpoints and %s", len(self.models), manifest)
        return manifest

    @classmethod
    def load(cls, directory: str | Path) -> RankerBank:
        directory = Path(directory)
        manifest = load_manifest(directory)
        models = {
            int(length): load_model(directory / name)
            for length, name in manifest["checkpoints"].items()
        }
        bank = cls(ModelConfig.from_dict(manifest["config"]), models=models)
        bank.holdout = manifest.get("holdout")
        bank.source = str(directory)
        return bank


__all__ = ["RankerBank", "cadence_grid"]
