# apps/corpus/synthetic.py
"""
Seeded generator of learning-curve corpora.

Every run saturates towards an asymptote that depends on its architecture tokens and
hyperparameters through weights shared by all datasets, so what is learned on one
dataset transfers to another. Datasets differ only in offset and scale of that asymptote.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from django.db import models
from scipy.special import expit

from apps.core.exceptions import ConfigurationError

from .records import Corpus, MetricOrientation, RunRecord

logger = logging.getLogger(__name__)

TOY_VOCABULARY = (
    "conv1x1",
    "conv3x3",
    "conv5x5",
    "sep3x3",
    "sep5x5",
    "dil3x3",
    "dil5x5",
    "max3x3",
    "avg3x3",
    "identity",
    "bn",
    "zero",
)
TOY_SEQUENCE_LENGTH = 8

FCNN_LAYERS = 2
FCNN_ACTIVATIONS = ("relu", "tanh")
FCNN_DROPOUTS = ("0.0", "0.3", "0.6")
FCNN_UNITS = ("16", "32", "64", "128", "256", "512")
FCNN_LEARNING_RATES = (0.0005, 0.001, 0.005, 0.01, 0.05, 0.1)
FCNN_BATCH_SIZES = (8, 16, 32, 64)
FCNN_VOCABULARY = (
    tuple(f"act:{a}" for a in FCNN_ACTIVATIONS)
    + tuple(f"dropout:{d}" for d in FCNN_DROPOUTS)
    + tuple(f"units:{u}" for u in FCNN_UNITS)
)

TOY_BATCH_SIZES = (16, 32, 64, 128, 256)

OFFSET_RANGE = (0.3, 0.5)
SCALE_RANGE = (0.3, 0.5)
EXPONENT_RANGE = (0.3, 1.0)
START_RANGE = (0.05, 0.15)


class CurveFamily(models.TextChoices):
    POW3 = "pow3", "pow3: c - a * t^-alpha"


class SearchSpace(models.TextChoices):
    TOY = "toy", "12-token toy sequences"
    FCNN = "fcnn", "Two-layer fully connected networks"


@dataclass(frozen=True)
class SyntheticSpec:
    n_datasets: int = 5
    runs_per_dataset: int = 100
    epochs: int = 100
    noise_sd: float = 0.0
    seed: int = 42
    curve_family: str = CurveFamily.POW3
    search_space: str = SearchSpace.TOY

    def __post_init__(self):
        for name in ("n_datasets", "runs_per_dataset", "epochs"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                raise ConfigurationError(f"{name} must be an integer >= 1, got {value!r}")
        if not self.noise_sd >= 0:
            raise ConfigurationError(f"noise_sd must be >= 0, got {self.noise_sd!r}")
        if self.curve_family not in CurveFamily.values:
            raise ConfigurationError(f"unknown curve_family {self.curve_family!r}")
        if self.search_space not in SearchSpace.values:
            raise ConfigurationError(f"unknown search_space {self.search_space!r}")


@dataclass(frozen=True)
class RunLatents:
    """Hidden generator draws of one run, kept for tests and diagnostics."""

    asymptote: float
    start: float
    exponent: float


def dataset_name(index: int) -> str:
    return f"synth-{index:02d}"


def pow3_curve(asymptote: float, start: float, exponent: float, epochs: int) -> np.ndarray:
    """y_t = c - (c - y_start) * t^-alpha for t = 1..L; y_1 equals y_start."""
    t = np.arange(1, epochs + 1, dtype=np.float64)
    return asymptote - (asymptote - start) * t ** (-exponent)


# ----------------------------
# search spaces
# ----------------------------
def _sample_toy(rng: np.random.Generator):
    idx = rng.integers(0, len(TOY_VOCABULARY), size=TOY_SEQUENCE_LENGTH)
    tokens = tuple(TOY_VOCABULARY[i] for i in idx)
    log_lr = rng.uniform(-4.0, -1.0)
    batch = TOY_BATCH_SIZES[int(rng.integers(0, len(TOY_BATCH_SIZES)))]
    hparams = {"learning_rate": float(10.0**log_lr), "batch_size": float(batch)}
    features = np.array([(log_lr + 2.5) / 1.5, (np.log2(batch) - 6.0) / 2.0])
    return tokens, hparams, features


def _sample_fcnn(rng: np.random.Generator):
    tokens: list[str] = []
    for _ in range(FCNN_LAYERS):
        tokens.append(f"act:{FCNN_ACTIVATIONS[int(rng.integers(0, len(FCNN_ACTIVATIONS)))]}")
        tokens.append(f"dropout:{FCNN_DROPOUTS[int(rng.integers(0, len(FCNN_DROPOUTS)))]}")
        tokens.append(f"units:{FCNN_UNITS[int(rng.integers(0, len(FCNN_UNITS)))]}")
    lr = FCNN_LEARNING_RATES[int(rng.integers(0, len(FCNN_LEARNING_RATES)))]
    batch = FCNN_BATCH_SIZES[int(rng.integers(0, len(FCNN_BATCH_SIZES)))]
    cosine = float(rng.integers(0, 2))
    hparams = {
        "learning_rate": float(lr),
        "batch_size": float(batch),
        "schedule_cosine": cosine,
        "schedule_fixed": 1.0 - cosine,
    }
    features = np.array(
        [(np.log10(lr) + 2.15) / 0.8, (np.log2(batch) - 4.5) / 1.2, 2.0 * cosine - 1.0]
    )
    return tuple(tokens), hparams, features


SPACES = {
    SearchSpace.TOY: (TOY_VOCABULARY, _sample_toy, 2),
    SearchSpace.FCNN: (FCNN_VOCABULARY, _sample_fcnn, 3),
}


def bag_of_tokens(tokens: tuple[str, ...], vocabulary: tuple[str, ...]) -> np.ndarray:
    present = set(tokens)
    return np.array([1.0 if t in present else 0.0 for t in vocabulary])


# ----------------------------
# generation
# ----------------------------
def generate_with_latents(spec: SyntheticSpec) -> tuple[Corpus, dict[str, RunLatents]]:
    rng = np.random.default_rng(spec.seed)
    vocabulary, sample, n_features = SPACES[SearchSpace(spec.search_space)]
    token_weights = rng.normal(0.0, 1.0, size=len(vocabulary))
    hparam_weights = rng.normal(0.0, 1.0, size=n_features)
    lower_better = spec.search_space == SearchSpace.FCNN
    orientation = (
        MetricOrientation.LOWER_BETTER if lower_better else MetricOrientation.HIGHER_BETTER
    )

    records: list[RunRecord] = []
    latents: dict[str, RunLatents] = {}
    for d in range(spec.n_datasets):
        dataset_id = dataset_name(d)
        offset = rng.uniform(*OFFSET_RANGE)
        scale = rng.uniform(*SCALE_RANGE)
        for i in range(spec.runs_per_dataset):
            tokens, hparams, features = sample(rng)
            logit = token_weights @ bag_of_tokens(tokens, vocabulary) + hparam_weights @ features
            asymptote = float(offset + scale * expit(logit))
            exponent = float(rng.uniform(*EXPONENT_RANGE))
            start = float(rng.uniform(*START_RANGE))
            curve = pow3_curve(asymptote, start, exponent, spec.epochs)
            if spec.noise_sd > 0:
                curve = curve + rng.normal(0.0, spec.noise_sd, size=spec.epochs)
            curve = np.clip(curve, 0.0, 1.0)
            if lower_better:
                curve = 1.0 - curve  # quality mirrored into an error-like value
            run_id = f"{dataset_id}-r{i:04d}"
            records.append(
                RunRecord(
                    dataset_id=dataset_id,
                    run_id=run_id,
                    arch_tokens=tokens,
                    hparams=hparams,
                    curve=tuple(float(v) for v in curve),
                    metric_orientation=orientation,
                )
            )
            latents[run_id] = RunLatents(asymptote, start, exponent)

    corpus = Corpus.from_records(records)
    logger.info(
        "Generated %s synthetic runs (%s datasets, L=%s, space=%s, seed=%s)",
        len(records),
        spec.n_datasets,
        spec.epochs,
        spec.search_space,
        spec.seed,
    )
    return corpus, latents


def synth_generate(spec: SyntheticSpec) -> Corpus:
    corpus, _ = generate_with_latents(spec)
    return corpus


__all__ = [
    "CurveFamily",
    "SearchSpace",
    "SyntheticSpec",
    "RunLatents",
    "TOY_VOCABULARY",
    "FCNN_VOCABULARY",
    "pow3_curve",
    "generate_with_latents",
    "synth_generate",
]
