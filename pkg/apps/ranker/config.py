# apps/ranker/config.py
from __future__ import annotations

from collections.abc import Mapping
from dataclasses import asdict, dataclass, fields, replace

from django.conf import settings
from django.db import models

from apps.core.exceptions import ConfigurationError


class CurveEncoderVariant(models.TextChoices):
    CONV_GLOBAL_MAX = "conv_global_max", "Convolutions + global max pooling"
    BEST_VALUE_ONLY = "best_value_only", "Best observed value only"


class Ablation(models.TextChoices):
    FULL = "full", "All components, pairwise loss"
    NO_DATASET = "no_dataset", "Without the dataset embedding"
    ARCH_ONLY = "arch_only", "Architecture and hyperparameters only"
    CURVE_ONLY = "curve_only", "Learning curve only"
    POINTWISE = "pointwise", "Pointwise L2 loss on the final value"
    NO_RECONSTRUCTION = "no_reconstruction", "Without the reconstruction loss"


class TrainingProfile(models.TextChoices):
    FULL = "full", "Settings as configured"
    ACCEPTANCE = "acceptance", "Reduced training for laptop-scale protocol runs"


# applied over the settings block, under explicit overrides
PROFILE_OVERRIDES: dict[str, dict[str, object]] = {
    TrainingProfile.FULL: {},
    TrainingProfile.ACCEPTANCE: {"steps": 300, "pairs_per_step": 64, "learning_rate": 3e-3},
}


# settings.LCRANK key -> ModelConfig field
SETTINGS_KEYS = {
    "SEED": "seed",
    "ALPHA": "alpha",
    "STEPS": "steps",
    "PAIRS_PER_STEP": "pairs_per_step",
    "LEARNING_RATE": "learning_rate",
}


@dataclass(frozen=True)
class ModelConfig:
    curve_kernel_sizes: tuple[int, ...] = (1, 2, 3, 4)
    filters_per_kernel: int = 16
    arch_embed_dim: int = 16
    arch_hidden_dim: int = 32
    dataset_embed_dim: int = 8
    combiner_hidden: int = 64
    alpha: float = 0.8
    perf_head_weight: float = 0.2
    with_final_head: bool = False
    curve_encoder_variant: str = CurveEncoderVariant.CONV_GLOBAL_MAX
    ablation: str = Ablation.FULL
    steps: int = 2000
    pairs_per_step: int = 256
    learning_rate: float = 1e-3
    seed: int = 42
    log_hparams: tuple[str, ...] = ("learning_rate",)
    cross_dataset_pairs: bool = False
    log_every: int = 100

    def __post_init__(self):
        object.__setattr__(
            self, "curve_kernel_sizes", tuple(sorted(set(int(k) for k in self.curve_kernel_sizes)))
        )
        object.__setattr__(self, "log_hparams", tuple(self.log_hparams))
        if not self.curve_kernel_sizes or min(self.curve_kernel_sizes) < 1:
            raise ConfigurationError("curve_kernel_sizes must be a non-empty set of sizes >= 1")
        dims = (
            "filters_per_kernel",
            "arch_embed_dim",
            "arch_hidden_dim",
            "dataset_embed_dim",
            "combiner_hidden",
        )
        for name in dims:
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be >= 1")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigurationError(f"alpha must lie in [0, 1], got {self.alpha!r}")
        if self.perf_head_weight < 0:
            raise ConfigurationError("perf_head_weight must be >= 0")
        if self.curve_encoder_variant not in CurveEncoderVariant.values:
            raise ConfigurationError(f"unknown curve encoder {self.curve_encoder_variant!r}")
        if self.ablation not in Ablation.values:
            raise ConfigurationError(f"unknown ablation {self.ablation!r}")
        if self.steps < 0 or self.pairs_per_step < 1:
            raise ConfigurationError("steps must be >= 0 and pairs_per_step >= 1")
        if self.learning_rate <= 0:
            raise ConfigurationError("learning_rate must be positive")

    @property
    def final_head_weight(self) -> float:
        """λ actually applied: the head only trains when explicitly enabled."""
        return self.perf_head_weight if self.with_final_head else 0.0

    @property
    def curve_width(self) -> int:
        if self.curve_encoder_variant == CurveEncoderVariant.BEST_VALUE_ONLY:
            return 1
        return len(self.curve_kernel_sizes) * self.filters_per_kernel

    @property
    def arch_width(self) -> int:
        """Encoder final hidden state followed by the mean of the token embeddings."""
        return self.arch_hidden_dim + self.arch_embed_dim

    # ---------- ablations ----------
    @property
    def uses_curve(self) -> bool:
        return self.ablation != Ablation.ARCH_ONLY

    @property
    def uses_arch(self) -> bool:
        return self.ablation != Ablation.CURVE_ONLY

    @property
    def uses_dataset(self) -> bool:
        return self.ablation not in (Ablation.NO_DATASET, Ablation.ARCH_ONLY, Ablation.CURVE_ONLY)

    @property
    def ranking_weight(self) -> float:
        """Weight of the ranking term; the reconstruction term gets the rest."""
        if self.ablation in (Ablation.NO_RECONSTRUCTION, Ablation.CURVE_ONLY):
            return 1.0
        return self.alpha

    def with_overrides(self, **overrides) -> ModelConfig:
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})

    @classmethod
    def from_settings(cls, *, profile: str | None = None, **overrides) -> ModelConfig:
        block = getattr(settings, "LCRANK", {}) or {}
        values = {field: block[key] for key, field in SETTINGS_KEYS.items() if key in block}
        if profile is not None:
            if profile not in PROFILE_OVERRIDES:
                raise ConfigurationError(f"unknown training profile {profile!r}")
            values.update(PROFILE_OVERRIDES[profile])
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    def to_dict(self) -> dict:
        payload = asdict(self)
        payload["curve_kernel_sizes"] = list(self.curve_kernel_sizes)
        payload["log_hparams"] = list(self.log_hparams)
        payload["curve_encoder_variant"] = str(self.curve_encoder_variant)
        payload["ablation"] = str(self.ablation)
        return payload

    @classmethod
    def from_dict(cls, payload: Mapping) -> ModelConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(payload) - known
        if unknown:
            raise ConfigurationError(f"unknown model config keys {sorted(unknown)}")
        data = dict(payload)
        for key in ("curve_kernel_sizes", "log_hparams"):
            if key in data:
                data[key] = tuple(data[key])
        return cls(**data)


__all__ = [
    "CurveEncoderVariant",
    "Ablation",
    "TrainingProfile",
    "PROFILE_OVERRIDES",
    "ModelConfig",
]
