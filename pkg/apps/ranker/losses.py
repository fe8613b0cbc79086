# apps/ranker/losses.py
from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from apps.tensors import ops
from apps.tensors.nn import LSTMState
from apps.tensors.tensor import Tensor, as_tensor

from .config import Ablation, ModelConfig
from .features import EncodedBatch
from .network import (
    Weights,
    decoder_logits,
    final_head,
    pair_probabilities,
    represent,
    score_head,
)
from .params import RankerParams

PROBABILITY_FLOOR = 1e-12


def pair_targets(final_i: float, final_j: float) -> float:
    """1 if run i ends better, 0.5 on a tie, 0 otherwise (finals higher-is-better)."""
    if final_i > final_j:
        return 1.0
    if final_i == final_j:
        return 0.5
    return 0.0


def pair_target_array(finals_i: np.ndarray, finals_j: np.ndarray) -> np.ndarray:
    return np.where(finals_i > finals_j, 1.0, np.where(finals_i == finals_j, 0.5, 0.0))


def loss_ce(targets, predicted) -> Tensor:
    """Mean binary cross-entropy between pair targets and predicted probabilities."""
    p_hat = as_tensor(predicted)
    p = np.asarray(targets, dtype=np.float64).reshape(p_hat.shape)
    p_hat = ops.clip(p_hat, PROBABILITY_FLOOR, 1.0 - PROBABILITY_FLOOR)
    positive = ops.mul(Tensor(p), ops.log(p_hat))
    negative = ops.mul(Tensor(1.0 - p), ops.log(ops.sub(1.0, p_hat)))
    return ops.mul(ops.mean(ops.add(positive, negative)), -1.0)


def loss_rec(
    tokens: np.ndarray,
    mask: np.ndarray,
    encoder_outputs: Sequence[Tensor],
    encoder_state: LSTMState,
    w: Weights,
    start_token: int,
) -> Tensor:
    """Per-token softmax cross-entropy of the reconstructed sequence, averaged over real tokens."""
    logits = decoder_logits(tokens, mask, encoder_outputs, encoder_state, w, start_token)
    vocab = logits[0].shape[1]
    total: Tensor | None = None
    for t, step in enumerate(logits):
        weights = np.zeros((tokens.shape[0], vocab))
        weights[np.arange(tokens.shape[0]), tokens[:, t]] = mask[:, t]
        term = ops.reduce_sum(ops.mul(ops.log_softmax(step, axis=-1), Tensor(weights)))
        total = term if total is None else ops.add(total, term)
    return ops.mul(total, -1.0 / float(mask.sum()))


def loss_perf(predicted: Tensor, finals: np.ndarray) -> Tensor:
    target = np.asarray(finals, dtype=np.float64).reshape(predicted.shape)
    diff = ops.sub(predicted, Tensor(target))
    return ops.mean(ops.mul(diff, diff))


@dataclass(frozen=True)
class LossBreakdown:
    ce: Tensor
    rec: Tensor
    perf: Tensor | None
    total: Tensor

    def values(self) -> dict[str, float]:
        return {
            "ce": self.ce.item(),
            "rec": self.rec.item(),
            "perf": self.perf.item() if self.perf is not None else 0.0,
            "total": self.total.item(),
        }


def combined_loss(
    batch: EncodedBatch,
    pair_i: np.ndarray,
    pair_j: np.ndarray,
    targets: np.ndarray,
    finals: np.ndarray,
    config: ModelConfig,
    params: RankerParams,
    w: Weights,
    start_token: int,
) -> LossBreakdown:
    """
    alpha * L_ce + (1 - alpha) * L_rec, plus lambda * L_perf when the final head is on.

    `pair_i` / `pair_j` index rows of `batch`; `finals` holds each row's normalized final.
    The pointwise ablation swaps L_ce for an L2 loss between score and final, and ablations
    without the reconstruction term put the whole ranking weight on it.
    """
    rep = represent(batch, config, params, w)
    scores = score_head(rep, w)
    if config.ablation == Ablation.POINTWISE:
        ce = loss_perf(scores, finals)
    else:
        p_hat = pair_probabilities(ops.take_rows(scores, pair_i), ops.take_rows(scores, pair_j))
        ce = loss_ce(targets, p_hat)
    rec = loss_rec(batch.tokens, batch.mask, rep.arch_outputs, rep.arch_state, w, start_token)
    weight = config.ranking_weight
    total = ops.add(ops.mul(ce, weight), ops.mul(rec, 1.0 - weight))
    perf = None
    if config.final_head_weight > 0:
        perf = loss_perf(final_head(rep, w), finals)
        total = ops.add(total, ops.mul(perf, config.final_head_weight))
    return LossBreakdown(ce, rec, perf, total)


def reconstruction_accuracy_batch(
    batch: EncodedBatch, config: ModelConfig, params: RankerParams, start_token: int
) -> float:
    w = params.tensors()
    rep = represent(batch, config, params, w)
    logits = decoder_logits(
        batch.tokens, batch.mask, rep.arch_outputs, rep.arch_state, w, start_token
    )
    predicted = np.stack([step.data.argmax(axis=-1) for step in logits], axis=1)
    hits = (predicted == batch.tokens) & (batch.mask > 0)
    return float(hits.sum() / batch.mask.sum())


__all__ = [
    "pair_targets",
    "pair_target_array",
    "loss_ce",
    "loss_rec",
    "loss_perf",
    "LossBreakdown",
    "combined_loss",
    "reconstruction_accuracy_batch",
]
