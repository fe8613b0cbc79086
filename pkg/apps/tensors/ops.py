# apps/tensors/ops.py
"""
Differentiable primitives.

Elementwise ops follow numpy broadcasting and fold the gradient back onto each input's
shape. Max reductions route the gradient to the first maximal element.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import expit

from .exceptions import DomainError, EmbeddingIndexError, EmptySequenceError, ShapeError
from .tensor import Tensor, accumulate, as_tensor, make_result


# ----------------------------
# helpers
# ----------------------------
def _broadcast_shape(op: str, *tensors: Tensor) -> tuple[int, ...]:
    try:
        return np.broadcast_shapes(*(t.shape for t in tensors))
    except ValueError:
        raise ShapeError(op, "shapes do not broadcast", [t.shape for t in tensors]) from None


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _axis(op: str, t: Tensor, axis: int) -> int:
    if not -t.ndim <= axis < t.ndim:
        raise ShapeError(op, f"axis {axis} out of range", [t.shape])
    return axis % t.ndim


# ----------------------------
# elementwise
# ----------------------------
def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape("add", a, b)

    def _backward(g):
        accumulate(a, _unbroadcast(g, a.shape))
        accumulate(b, _unbroadcast(g, b.shape))

    return make_result(a.data + b.data, "add", (a, b), _backward)


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape("subtract", a, b)

    def _backward(g):
        accumulate(a, _unbroadcast(g, a.shape))
        accumulate(b, _unbroadcast(-g, b.shape))

    return make_result(a.data - b.data, "subtract", (a, b), _backward)


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape("multiply", a, b)

    def _backward(g):
        accumulate(a, _unbroadcast(g * b.data, a.shape))
        accumulate(b, _unbroadcast(g * a.data, b.shape))

    return make_result(a.data * b.data, "multiply", (a, b), _backward)


def tanh(x: Tensor) -> Tensor:
    out = np.tanh(x.data)

    def _backward(g):
        accumulate(x, g * (1.0 - out * out))

    return make_result(out, "tanh", (x,), _backward)


def sigmoid(x: Tensor) -> Tensor:
    out = expit(x.data)

    def _backward(g):
        accumulate(x, g * out * (1.0 - out))

    return make_result(out, "sigmoid", (x,), _backward)


def exp(x: Tensor) -> Tensor:
    out = np.exp(x.data)

    def _backward(g):
        accumulate(x, g * out)

    return make_result(out, "exponential", (x,), _backward)


def log(x: Tensor) -> Tensor:
    if np.any(x.data <= 0.0):
        raise DomainError("logarithm", "input must be strictly positive", [x.shape])

    def _backward(g):
        accumulate(x, g / x.data)

    return make_result(np.log(x.data), "logarithm", (x,), _backward)


def clip(x: Tensor, low: float, high: float) -> Tensor:
    inside = (x.data >= low) & (x.data <= high)

    def _backward(g):
        accumulate(x, g * inside)

    return make_result(np.clip(x.data, low, high), "clip", (x,), _backward)


# ----------------------------
# shape ops
# ----------------------------
def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    try:
        out = x.data.reshape(tuple(shape))
    except ValueError:
        raise ShapeError("reshape", f"cannot reshape to {tuple(shape)}", [x.shape]) from None

    def _backward(g):
        accumulate(x, g.reshape(x.shape))

    return make_result(out, "reshape", (x,), _backward)


def concatenate(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    if not tensors:
        raise EmptySequenceError("concatenate", "nothing to concatenate")
    ax = _axis("concatenate", tensors[0], axis)
    shapes = [t.shape for t in tensors]
    for s in shapes:
        if len(s) != len(shapes[0]) or any(
            d != d0 for i, (d, d0) in enumerate(zip(s, shapes[0], strict=True)) if i != ax
        ):
            raise ShapeError("concatenate", f"shapes differ off axis {ax}", shapes)
    out = np.concatenate([t.data for t in tensors], axis=ax)
    bounds = np.cumsum([s[ax] for s in shapes])[:-1]

    def _backward(g):
        for t, piece in zip(tensors, np.split(g, bounds, axis=ax), strict=True):
            accumulate(t, piece)

    return make_result(out, "concatenate", tensors, _backward)


def stack(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    if not tensors:
        raise EmptySequenceError("stack", "nothing to stack")
    shapes = [t.shape for t in tensors]
    if any(s != shapes[0] for s in shapes):
        raise ShapeError("stack", "all inputs must share one shape", shapes)
    out = np.stack([t.data for t in tensors], axis=axis)

    def _backward(g):
        for i, t in enumerate(tensors):
            accumulate(t, np.take(g, i, axis=axis))

    return make_result(out, "stack", tensors, _backward)


def slice_axis(x: Tensor, start: int, stop: int, axis: int = -1) -> Tensor:
    ax = _axis("slice", x, axis)
    if not 0 <= start < stop <= x.shape[ax]:
        raise ShapeError("slice", f"range [{start}, {stop}) outside axis {ax}", [x.shape])
    index = [slice(None)] * x.ndim
    index[ax] = slice(start, stop)
    index = tuple(index)

    def _backward(g):
        full = np.zeros_like(x.data)
        full[index] = g
        accumulate(x, full)

    return make_result(x.data[index], "slice", (x,), _backward)


# ----------------------------
# reductions
# ----------------------------
def reduce_sum(x: Tensor, axis: int | None = None, keepdims: bool = False) -> Tensor:
    if axis is not None:
        axis = _axis("reduce_sum", x, axis)
    out = x.data.sum(axis=axis, keepdims=keepdims)

    def _backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        accumulate(x, np.broadcast_to(g, x.shape))

    return make_result(out, "reduce_sum", (x,), _backward)


def mean(x: Tensor) -> Tensor:
    return mul(reduce_sum(x), 1.0 / x.data.size)


def reduce_max(x: Tensor, axis: int | None = None) -> Tensor:
    if axis is None:
        flat = int(np.argmax(x.data))  # first maximal element

        def _backward(g):
            full = np.zeros(x.data.size)
            full[flat] = float(np.asarray(g).reshape(-1)[0])
            accumulate(x, full)

        return make_result(x.data.reshape(-1)[flat], "reduce_max", (x,), _backward)

    ax = _axis("reduce_max", x, axis)
    idx = np.expand_dims(np.argmax(x.data, axis=ax), ax)
    out = np.take_along_axis(x.data, idx, axis=ax).squeeze(ax)

    def _backward(g):
        full = np.zeros_like(x.data)
        np.put_along_axis(full, idx, np.expand_dims(g, ax), axis=ax)
        accumulate(x, full)

    return make_result(out, "reduce_max", (x,), _backward)


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    ax = _axis("softmax", x, axis)
    shifted = x.data - x.data.max(axis=ax, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=ax, keepdims=True)

    def _backward(g):
        accumulate(x, out * (g - (g * out).sum(axis=ax, keepdims=True)))

    return make_result(out, "softmax", (x,), _backward)


def log_softmax(x: Tensor, axis: int = -1) -> Tensor:
    ax = _axis("log_softmax", x, axis)
    shifted = x.data - x.data.max(axis=ax, keepdims=True)
    out = shifted - np.log(np.exp(shifted).sum(axis=ax, keepdims=True))
    probs = np.exp(out)

    def _backward(g):
        accumulate(x, g - probs * g.sum(axis=ax, keepdims=True))

    return make_result(out, "log_softmax", (x,), _backward)


# ----------------------------
# linear algebra / lookup
# ----------------------------
def matmul(a: Tensor, b: Tensor) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError("matmul", "expected [m x k] . [k x n]", [a.shape, b.shape])

    def _backward(g):
        accumulate(a, g @ b.data.T)
        accumulate(b, a.data.T @ g)

    return make_result(a.data @ b.data, "matmul", (a, b), _backward)


def take_rows(table: Tensor, indices: Sequence[int], tokens: Sequence[str] | None = None) -> Tensor:
    """Rows of a [vocab x dim] table; gradients scatter-add into the selected rows."""
    if table.ndim != 2:
        raise ShapeError("embedding_lookup", "table must be [vocab x dim]", [table.shape])
    idx = np.asarray(indices, dtype=np.int64).reshape(-1)
    bad = np.flatnonzero((idx < 0) | (idx >= table.shape[0]))
    if bad.size:
        i = int(bad[0])
        label = repr(tokens[i]) if tokens is not None else f"index {int(idx[i])}"
        raise EmbeddingIndexError(
            "embedding_lookup", f"{label} outside vocabulary of {table.shape[0]}", [table.shape]
        )

    def _backward(g):
        full = np.zeros_like(table.data)
        np.add.at(full, idx, g)
        accumulate(table, full)

    return make_result(table.data[idx], "embedding_lookup", (table,), _backward)


def embedding_lookup(table: Tensor, index: int, token: str | None = None) -> Tensor:
    row = take_rows(table, [index], None if token is None else [token])
    return reshape(row, (table.shape[1],))


def conv1d_valid(signal: Tensor, kernels: Tensor, bias: Tensor) -> Tensor:
    """
    Stride-1 convolution without padding.

    signal: [l x c_in] or [batch x l x c_in]; kernels: [k x c_in x c_out]; bias: [c_out].
    """
    batched = signal.ndim == 3
    x = signal.data if batched else signal.data[None]
    if x.ndim != 3 or kernels.ndim != 3 or bias.ndim != 1:
        raise ShapeError("conv1d_valid", "bad ranks", [signal.shape, kernels.shape, bias.shape])
    _, length, c_in = x.shape
    k, k_in, c_out = kernels.shape
    if k_in != c_in or bias.shape[0] != c_out:
        raise ShapeError(
            "conv1d_valid", "channel mismatch", [signal.shape, kernels.shape, bias.shape]
        )
    if k > length:
        raise ShapeError(
            "conv1d_valid", f"kernel size {k} exceeds signal length {length}", [signal.shape]
        )
    steps = length - k + 1
    windows = sliding_window_view(x, k, axis=1)  # [batch, steps, c_in, k]
    out = np.einsum("btck,kco->bto", windows, kernels.data) + bias.data

    def _backward(g):
        g = g if batched else g[None]
        accumulate(kernels, np.einsum("btck,bto->kco", windows, g))
        accumulate(bias, g.sum(axis=(0, 1)))
        if signal.requires_grad:
            gx = np.zeros_like(x)
            for j in range(k):
                gx[:, j : j + steps, :] += g @ kernels.data[j].T
            accumulate(signal, gx if batched else gx[0])

    out = out if batched else out[0]
    return make_result(out, "conv1d_valid", (signal, kernels, bias), _backward)


def global_max_pool(signal: Tensor) -> Tensor:
    """Per-channel maximum over the length axis of [l x c] or [batch x l x c]."""
    if signal.ndim not in (2, 3):
        raise ShapeError("global_max_pool", "expected [l x c] or [batch x l x c]", [signal.shape])
    if signal.shape[-2] < 1:
        raise EmptySequenceError("global_max_pool", "empty length axis", [signal.shape])
    return reduce_max(signal, axis=-2)


__all__ = [
    "add",
    "sub",
    "mul",
    "tanh",
    "sigmoid",
    "exp",
    "log",
    "clip",
    "reshape",
    "concatenate",
    "stack",
    "slice_axis",
    "reduce_sum",
    "mean",
    "reduce_max",
    "softmax",
    "log_softmax",
    "matmul",
    "take_rows",
    "embedding_lookup",
    "conv1d_valid",
    "global_max_pool",
]
