# apps/ranker/network.py
"""
Forward pass of the ranking model.

A model description x is encoded by four components: the partial learning curve
(convolutions + global max pooling), the architecture token sequence (LSTM encoder state
plus mean token embedding), the dataset (learned embedding row) and the hyperparameter
vector. Their concatenation goes through one tanh layer, from which a score head and a
final-performance head read. Components switched off by `ModelConfig.ablation` enter the
concatenation as zeros.

Functions taking `w` expect the mapping returned by `RankerParams.tensors()`; the batched
versions are what training uses, the single-input ones wrap them.
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from apps.tensors import nn, ops
from apps.tensors.tensor import Tensor

from .config import CurveEncoderVariant, ModelConfig
from .features import EncodedBatch, EncodedInput
from .params import DATASET_TABLE, RankerParams

MASKED_ENERGY = -1e9

Weights = Mapping[str, Tensor]


@dataclass(frozen=True)
class Representation:
    hidden: Tensor  # [batch x combiner_hidden]
    arch_outputs: list[Tensor]  # per step [batch x arch_hidden]
    arch_state: nn.LSTMState


def lstm_weights(w: Weights, prefix: str) -> nn.LSTMWeights:
    return nn.LSTMWeights(
        w_input=w[f"{prefix}.w_input"], w_hidden=w[f"{prefix}.w_hidden"], bias=w[f"{prefix}.bias"]
    )


# ----------------------------
# components
# ----------------------------
def encode_curves(curves: np.ndarray, config: ModelConfig, w: Weights) -> Tensor:
    """[batch x l] normalized partial curves -> [batch x curve_width], for every l >= 0."""
    batch, length = curves.shape
    if config.curve_encoder_variant == CurveEncoderVariant.BEST_VALUE_ONLY:
        if length == 0:
            return Tensor(np.zeros((batch, 1)))
        return Tensor(curves.max(axis=1, keepdims=True))

    f = config.filters_per_kernel
    if length == 0:
        return Tensor(np.zeros((batch, config.curve_width)))
    signal = Tensor(curves.reshape(batch, length, 1))
    blocks: list[Tensor] = []
    for k in config.curve_kernel_sizes:
        if k > length:
            blocks.append(Tensor(np.zeros((batch, f))))
            continue
        conv = ops.conv1d_valid(signal, w[f"curve.k{k}.kernel"], w[f"curve.k{k}.bias"])
        blocks.append(ops.global_max_pool(conv))
    return ops.concatenate(blocks, axis=-1)


def encode_curve(curve: Sequence[float], config: ModelConfig, params: RankerParams) -> Tensor:
    values = np.asarray(curve, dtype=np.float64).reshape(1, len(curve))
    out = encode_curves(values, config, params.tensors())
    return ops.reshape(out, (out.shape[1],))


def encode_archs(
    tokens: np.ndarray, mask: np.ndarray, w: Weights
) -> tuple[Tensor, list[Tensor], nn.LSTMState]:
    """
    Embed and encode padded token rows. The architecture embedding is the encoder state after
    each row's last token, followed by the mean of the row's token embeddings.
    """
    steps = tokens.shape[1]
    table = w["arch.embedding"]
    inputs = [ops.take_rows(table, tokens[:, t]) for t in range(steps)]
    outputs, state = nn.lstm_forward(inputs, lstm_weights(w, "encoder"), mask=mask)
    weights = mask / np.maximum(mask.sum(axis=1, keepdims=True), 1.0)
    pooled = ops.reduce_sum(
        ops.mul(ops.stack(inputs, axis=1), Tensor(weights[:, :, None])), axis=1
    )
    return ops.concatenate([state.hidden, pooled], axis=-1), outputs, state


def encode_arch(
    tokens: Sequence[int], config: ModelConfig, params: RankerParams
) -> tuple[Tensor, list[Tensor]]:
    idx = np.asarray(tokens, dtype=np.int64).reshape(1, -1)
    hidden, outputs, _ = encode_archs(idx, np.ones(idx.shape), params.tensors())
    return ops.reshape(hidden, (config.arch_width,)), outputs


def dataset_embeddings(
    dataset_ids: Sequence[str], params: RankerParams, w: Weights | None = None
) -> Tensor:
    rows = params.dataset_rows(dataset_ids)  # may grow the table
    table = w[DATASET_TABLE] if w is not None else None
    if table is None or table.shape[0] != params[DATASET_TABLE].shape[0]:
        table = Tensor(params[DATASET_TABLE])
    return ops.take_rows(table, rows, list(dataset_ids))


def encode_dataset(dataset_id: str, params: RankerParams) -> Tensor:
    row = dataset_embeddings([dataset_id], params)
    return ops.reshape(row, (params.dataset_embed_dim,))


def represent(
    batch: EncodedBatch, config: ModelConfig, params: RankerParams, w: Weights
) -> Representation:
    size = batch.size
    arch, outputs, state = encode_archs(batch.tokens, batch.mask, w)
    if config.uses_curve:
        curve = encode_curves(batch.curves, config, w)
    else:
        curve = Tensor(np.zeros((size, config.curve_width)))
    if not config.uses_arch:
        arch = Tensor(np.zeros((size, config.arch_width)))
    if config.uses_dataset:
        data = dataset_embeddings(batch.dataset_ids, params, w)
    else:
        data = Tensor(np.zeros((size, params.dataset_embed_dim)))
    parts = [curve, arch, data]
    if batch.hparams.shape[1]:
        hparams = batch.hparams if config.uses_arch else np.zeros_like(batch.hparams)
        parts.append(Tensor(hparams))
    hidden = nn.dense(ops.concatenate(parts, axis=-1), w["combiner.w"], w["combiner.b"], "tanh")
    return Representation(hidden, outputs, state)


def score_head(rep: Representation, w: Weights) -> Tensor:
    return nn.dense(rep.hidden, w["score.w"], w["score.b"])


def final_head(rep: Representation, w: Weights) -> Tensor:
    return nn.dense(rep.hidden, w["final.w"], w["final.b"])


# ----------------------------
# decoder
# ----------------------------
def decoder_logits(
    tokens: np.ndarray,
    mask: np.ndarray,
    encoder_outputs: Sequence[Tensor],
    encoder_state: nn.LSTMState,
    w: Weights,
    start_token: int,
) -> list[Tensor]:
    """
    Teacher-forced decoding with additive attention over the encoder steps.

    Step t consumes the true token t-1 (the start symbol at t = 0) and returns logits
    over the vocabulary for token t.
    """
    batch, steps = tokens.shape
    keys = ops.stack(list(encoder_outputs), axis=1)  # [batch x steps x h]
    h = keys.shape[2]
    projected = ops.reshape(
        ops.matmul(ops.reshape(keys, (batch * steps, h)), w["attention.key"]), (batch, steps, h)
    )
    energy_mask = Tensor(np.where(mask > 0, 0.0, MASKED_ENERGY))
    decoder = lstm_weights(w, "decoder")
    table = w["arch.embedding"]

    state = encoder_state
    previous = np.full(batch, start_token, dtype=np.int64)
    logits: list[Tensor] = []
    for t in range(steps):
        state = nn.lstm_cell(ops.take_rows(table, previous), state, decoder)
        query = ops.reshape(ops.matmul(state.hidden, w["attention.query"]), (batch, 1, h))
        energy = ops.tanh(ops.add(projected, query))
        energy = ops.reshape(
            ops.matmul(ops.reshape(energy, (batch * steps, h)), w["attention.v"]), (batch, steps)
        )
        attention = ops.softmax(ops.add(energy, energy_mask), axis=-1)
        context = ops.reduce_sum(ops.mul(ops.reshape(attention, (batch, steps, 1)), keys), axis=1)
        out = ops.concatenate([state.hidden, context], axis=-1)
        logits.append(nn.dense(out, w["decoder.out.w"], w["decoder.out.b"]))
        previous = tokens[:, t]
    return logits


# ----------------------------
# scoring
# ----------------------------
def score_batch(batch: EncodedBatch, config: ModelConfig, params: RankerParams) -> np.ndarray:
    w = params.tensors()
    return score_head(represent(batch, config, params, w), w).values.copy()


def score(x: EncodedInput, config: ModelConfig, params: RankerParams) -> float:
    return float(score_batch(EncodedBatch.from_inputs([x]), config, params)[0])


def pair_probability(f_i: float, f_j: float) -> float:
    """P(run i ends better than run j) = logistic(f_i - f_j)."""
    return float(expit(f_i - f_j))


def pair_probabilities(s_i: Tensor, s_j: Tensor) -> Tensor:
    return ops.sigmoid(ops.sub(s_i, s_j))


def final_head_batch(batch: EncodedBatch, config: ModelConfig, params: RankerParams) -> np.ndarray:
    w = params.tensors()
    return final_head(represent(batch, config, params, w), w).values.copy()


def clamp_final(raw: float, floor: float | None, cap: float | None) -> float:
    """Cap at the mean of earlier finals, then floor at the best value already observed."""
    value = raw
    if cap is not None:
        value = min(value, cap)
    if floor is not None:
        value = max(value, floor)
    return float(value)


def predict_final(
    x: EncodedInput,
    params: RankerParams,
    config: ModelConfig,
    *,
    context: Sequence[float] = (),
    best_observed: float | None = None,
) -> float:
    """
    Predicted final performance (normalized, higher is better) of a possibly terminated run.

    Without `context` the raw head output is returned. Otherwise it is clamped to
    [best observed value of the partial curve, mean of the earlier finals], the observed
    bound winning when the two conflict.
    """
    raw = float(final_head_batch(EncodedBatch.from_inputs([x]), config, params)[0])
    if not len(context):
        return raw
    if best_observed is None and x.length:
        best_observed = float(np.max(x.curve))
    return clamp_final(raw, best_observed, float(np.mean(context)))


__all__ = [
    "Representation",
    "encode_curves",
    "encode_curve",
    "encode_archs",
    "encode_arch",
    "dataset_embeddings",
    "encode_dataset",
    "represent",
    "score_head",
    "final_head",
    "decoder_logits",
    "score_batch",
    "score",
    "pair_probability",
    "pair_probabilities",
    "final_head_batch",
    "clamp_final",
    "predict_final",
]
