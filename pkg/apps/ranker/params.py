# apps/ranker/params.py
from __future__ import annotations

import logging
from collections.abc import Iterable, Mapping

import numpy as np

from apps.tensors import nn
from apps.tensors.tensor import Tensor

from .config import CurveEncoderVariant, ModelConfig
from .exceptions import CheckpointError

logger = logging.getLogger(__name__)

DATASET_TABLE = "dataset.embedding"
DATASET_STREAM = 7919  # seed stream of dataset embedding rows


def dataset_row(seed: int, row: int, dim: int) -> np.ndarray:
    """Initial embedding of dataset row `row`; independent of registration history."""
    rng = np.random.default_rng([seed, DATASET_STREAM, row])
    return rng.uniform(-nn.EMBEDDING_INIT_SCALE, nn.EMBEDDING_INIT_SCALE, size=(1, dim))


def combiner_input_width(config: ModelConfig, n_hparams: int) -> int:
    return config.curve_width + config.arch_width + config.dataset_embed_dim + n_hparams


class RankerParams:
    """
    All learnable weights of one ranking model, as named float64 arrays, plus the
    dataset-id -> embedding-row map. Unseen dataset ids get a fresh row on first use.
    """

    def __init__(
        self, arrays: Mapping[str, np.ndarray], dataset_index: Mapping[str, int], seed: int
    ):
        self.arrays: dict[str, np.ndarray] = {
            k: np.asarray(v, dtype=np.float64) for k, v in arrays.items()
        }
        self.dataset_index: dict[str, int] = dict(dataset_index)
        self.seed = int(seed)

    @classmethod
    def initialize(
        cls,
        config: ModelConfig,
        *,
        vocab_size: int,
        n_hparams: int,
        dataset_ids: Iterable[str],
    ) -> RankerParams:
        rng = np.random.default_rng(config.seed)
        e, h = config.arch_embed_dim, config.arch_hidden_dim
        c, f = config.combiner_hidden, config.filters_per_kernel
        tensors: dict[str, Tensor] = {}

        if config.curve_encoder_variant == CurveEncoderVariant.CONV_GLOBAL_MAX:
            for k in config.curve_kernel_sizes:
                tensors[f"curve.k{k}.kernel"] = nn.glorot_uniform(rng, (k, 1, f), k, f)
                tensors[f"curve.k{k}.bias"] = nn.zeros((f,))

        # one extra row for the decoder's start symbol
        tensors["arch.embedding"] = nn.embedding_table(rng, vocab_size + 1, e)
        tensors.update(nn.LSTMWeights.initialize(rng, e, h).tensors("encoder"))
        tensors.update(nn.LSTMWeights.initialize(rng, e, h).tensors("decoder"))
        tensors["attention.query"] = nn.glorot_uniform(rng, (h, h), h, h)
        tensors["attention.key"] = nn.glorot_uniform(rng, (h, h), h, h)
        tensors["attention.v"] = nn.glorot_uniform(rng, (h, 1), h, 1)
        tensors["decoder.out.w"] = nn.glorot_uniform(rng, (2 * h, vocab_size), 2 * h, vocab_size)
        tensors["decoder.out.b"] = nn.zeros((vocab_size,))

        width = combiner_input_width(config, n_hparams)
        tensors["combiner.w"] = nn.glorot_uniform(rng, (width, c), width, c)
        tensors["combiner.b"] = nn.zeros((c,))
        tensors["score.w"] = nn.glorot_uniform(rng, (c, 1), c, 1)
        tensors["score.b"] = nn.zeros((1,))
        tensors["final.w"] = nn.glorot_uniform(rng, (c, 1), c, 1)
        tensors["final.b"] = nn.zeros((1,))

        arrays = {name: t.data for name, t in tensors.items()}
        ids = list(dict.fromkeys(dataset_ids))
        rows = [dataset_row(config.seed, i, config.dataset_embed_dim) for i in range(len(ids))]
        arrays[DATASET_TABLE] = np.vstack(rows) if rows else np.zeros((0, config.dataset_embed_dim))
        return cls(arrays, {d: i for i, d in enumerate(ids)}, config.seed)

    # ---------- access ----------
    def __contains__(self, name: str) -> bool:
        return name in self.arrays

    def __getitem__(self, name: str) -> np.ndarray:
        return self.arrays[name]

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(self.arrays)

    @property
    def dataset_embed_dim(self) -> int:
        return self.arrays[DATASET_TABLE].shape[1]

    def tensors(self, requires_grad: bool = False) -> dict[str, Tensor]:
        return {
            name: Tensor(value, requires_grad=requires_grad) for name, value in self.arrays.items()
        }

    def register_dataset(self, dataset_id: str) -> int:
        """Row of `dataset_id`, allocating and seeding a new one if the id is unseen."""
        row = self.dataset_index.get(dataset_id)
        if row is not None:
            return row
        row = self.arrays[DATASET_TABLE].shape[0]
        fresh = dataset_row(self.seed, row, self.dataset_embed_dim)
        self.arrays[DATASET_TABLE] = np.vstack([self.arrays[DATASET_TABLE], fresh])
        self.dataset_index[dataset_id] = row
        logger.info("Registered dataset %r at embedding row %s", dataset_id, row)
        return row

    def dataset_rows(self, dataset_ids: Iterable[str]) -> np.ndarray:
        return np.array([self.register_dataset(d) for d in dataset_ids], dtype=np.int64)

    def with_arrays(self, arrays: Mapping[str, np.ndarray]) -> RankerParams:
        return RankerParams(arrays, self.dataset_index, self.seed)

    def copy(self) -> RankerParams:
        arrays = {k: v.copy() for k, v in self.arrays.items()}
        return RankerParams(arrays, self.dataset_index, self.seed)

    def all_finite(self) -> bool:
        return all(bool(np.all(np.isfinite(v))) for v in self.arrays.values())

    # ---------- persistence ----------
    def to_payload(self) -> dict:
        return {
            "seed": self.seed,
            "dataset_index": dict(self.dataset_index),
            "tensors": {
                name: {"shape": list(value.shape), "values": value.reshape(-1).tolist()}
                for name, value in self.arrays.items()
            },
        }

    @classmethod
    def from_payload(cls, payload: Mapping) -> RankerParams:
        try:
            arrays = {
                name: np.array(entry["values"], dtype=np.float64).reshape(entry["shape"])
                for name, entry in payload["tensors"].items()
            }
            index = {str(k): int(v) for k, v in payload["dataset_index"].items()}
            return cls(arrays, index, int(payload["seed"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise CheckpointError(f"malformed parameter payload: {exc}") from exc


__all__ = ["RankerParams", "dataset_row", "combiner_input_width", "DATASET_TABLE"]
