# apps/tensors/nn.py
"""Layers built from the primitives: initializers, dense layers and the LSTM."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from . import ops
from .exceptions import EmptySequenceError, ShapeError
from .tensor import Tensor

EMBEDDING_INIT_SCALE = 0.1


# ---------- initializers ----------
def glorot_uniform(
    rng: np.random.Generator, shape: Sequence[int], fan_in: int, fan_out: int
) -> Tensor:
    limit = float(np.sqrt(6.0 / (fan_in + fan_out)))
    return Tensor(rng.uniform(-limit, limit, size=tuple(shape)), requires_grad=True)


def zeros(shape: Sequence[int]) -> Tensor:
    return Tensor(np.zeros(tuple(shape)), requires_grad=True)


def embedding_table(rng: np.random.Generator, vocab: int, dim: int) -> Tensor:
    if vocab < 1 or dim < 1:
        raise ShapeError("embedding_table", "vocab and dim must be >= 1", [(vocab, dim)])
    return Tensor(
        rng.uniform(-EMBEDDING_INIT_SCALE, EMBEDDING_INIT_SCALE, size=(vocab, dim)),
        requires_grad=True,
    )


# ---------- dense ----------
def dense(x: Tensor, weight: Tensor, bias: Tensor, activation: str | None = None) -> Tensor:
    out = ops.add(ops.matmul(x, weight), bias)
    if activation == "tanh":
        return ops.tanh(out)
    if activation == "sigmoid":
        return ops.sigmoid(out)
    return out


# ---------- LSTM ----------
@dataclass(frozen=True)
class LSTMWeights:
    """Gate blocks are laid out [input | forget | candidate | output] along the last axis."""

    w_input: Tensor  # [dim_in x 4h]
    w_hidden: Tensor  # [h x 4h]
    bias: Tensor  # [4h]

    @property
    def hidden_dim(self) -> int:
        return self.w_hidden.shape[0]

    @property
    def input_dim(self) -> int:
        return self.w_input.shape[0]

    @classmethod
    def initialize(cls, rng: np.random.Generator, dim_in: int, hidden: int) -> LSTMWeights:
        return cls(
            w_input=glorot_uniform(rng, (dim_in, 4 * hidden), dim_in, 4 * hidden),
            w_hidden=glorot_uniform(rng, (hidden, 4 * hidden), hidden, 4 * hidden),
            bias=zeros((4 * hidden,)),
        )

    def tensors(self, prefix: str) -> dict[str, Tensor]:
        return {
            f"{prefix}.w_input": self.w_input,
            f"{prefix}.w_hidden": self.w_hidden,
            f"{prefix}.bias": self.bias,
        }


@dataclass(frozen=True)
class LSTMState:
    hidden: Tensor  # [batch x h]
    cell: Tensor  # [batch x h]

    @classmethod
    def zeros(cls, batch: int, hidden: int) -> LSTMState:
        return cls(Tensor(np.zeros((batch, hidden))), Tensor(np.zeros((batch, hidden))))


def lstm_cell(x: Tensor, state: LSTMState, weights: LSTMWeights) -> LSTMState:
    h = weights.hidden_dim
    if x.ndim != 2 or x.shape[1] != weights.input_dim:
        raise ShapeError(
            "lstm_cell", "input must be [batch x dim_in]", [x.shape, weights.w_input.shape]
        )
    z = ops.add(
        ops.add(ops.matmul(x, weights.w_input), ops.matmul(state.hidden, weights.w_hidden)),
        weights.bias,
    )
    i = ops.sigmoid(ops.slice_axis(z, 0, h))
    f = ops.sigmoid(ops.slice_axis(z, h, 2 * h))
    g = ops.tanh(ops.slice_axis(z, 2 * h, 3 * h))
    o = ops.sigmoid(ops.slice_axis(z, 3 * h, 4 * h))
    cell = ops.add(ops.mul(f, state.cell), ops.mul(i, g))
    hidden = ops.mul(o, ops.tanh(cell))
    return LSTMState(hidden, cell)


def lstm_forward(
    inputs: Sequence[Tensor],
    weights: LSTMWeights,
    initial_state: LSTMState | None = None,
    mask: np.ndarray | None = None,
) -> tuple[list[Tensor], LSTMState]:
    """
    Run the recurrence over `inputs` (each [batch x dim_in]).

    `mask` ([batch x steps], 1 = real token) freezes the state of padded positions so that
    the final state of every row is the state after its last real token.
    """
    if not inputs:
        raise EmptySequenceError("lstm_forward", "input sequence is empty")
    batch = inputs[0].shape[0]
    state = initial_state or LSTMState.zeros(batch, weights.hidden_dim)
    outputs: list[Tensor] = []
    for t, x in enumerate(inputs):
        nxt = lstm_cell(x, state, weights)
        if mask is not None:
            keep = Tensor(mask[:, t : t + 1])
            hold = Tensor(1.0 - mask[:, t : t + 1])
            nxt = LSTMState(
                ops.add(ops.mul(keep, nxt.hidden), ops.mul(hold, state.hidden)),
                ops.add(ops.mul(keep, nxt.cell), ops.mul(hold, state.cell)),
            )
        state = nxt
        outputs.append(state.hidden)
    return outputs, state


__all__ = [
    "glorot_uniform",
    "zeros",
    "embedding_table",
    "dense",
    "LSTMWeights",
    "LSTMState",
    "lstm_cell",
    "lstm_forward",
]
