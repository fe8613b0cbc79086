# apps/tensors/gradcheck.py
"""Central finite-difference checks for analytic gradients."""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from .tensor import Tensor

FD_STEP = 1e-5


@dataclass(frozen=True)
class GradCheckReport:
    coordinates: np.ndarray
    analytic: np.ndarray
    numeric: np.ndarray

    @property
    def relative_error(self) -> np.ndarray:
        scale = np.maximum(np.abs(self.analytic) + np.abs(self.numeric), 1e-12)
        return np.abs(self.analytic - self.numeric) / scale

    @property
    def absolute_error(self) -> np.ndarray:
        return np.abs(self.analytic - self.numeric)

    def passes(self, rel_tol: float, abs_tol: float = 1e-8) -> bool:
        return bool(np.all((self.relative_error <= rel_tol) | (self.absolute_error <= abs_tol)))


def numeric_gradient(
    loss_fn: Callable[[], float], tensor: Tensor, coordinates: np.ndarray, step: float = FD_STEP
) -> np.ndarray:
    flat = tensor.data.reshape(-1)  # view: edits reach tensor.data
    out = np.empty(len(coordinates))
    for n, idx in enumerate(coordinates):
        original = flat[idx]
        flat[idx] = original + step
        plus = loss_fn()
        flat[idx] = original - step
        minus = loss_fn()
        flat[idx] = original
        out[n] = (plus - minus) / (2.0 * step)
    return out


def check_gradient(
    loss_fn: Callable[[], Tensor],
    tensor: Tensor,
    *,
    samples: int | None = None,
    rng: np.random.Generator | None = None,
    step: float = FD_STEP,
) -> GradCheckReport:
    """
    Compare the analytic gradient of `loss_fn()` w.r.t. `tensor` with central differences.

    `loss_fn` must rebuild the graph on every call. With `samples` set, that many flat
    coordinates are drawn (with replacement when the tensor is smaller).
    """
    tensor.zero_grad()
    loss = loss_fn()
    loss.backward()
    analytic_full = (
        tensor.grad.reshape(-1).copy() if tensor.grad is not None else np.zeros(tensor.data.size)
    )
    size = tensor.data.size
    if samples is None:
        coords = np.arange(size)
    else:
        rng = rng or np.random.default_rng(0)
        coords = rng.choice(size, size=samples, replace=samples > size)
    numeric = numeric_gradient(lambda: loss_fn().item(), tensor, coords, step)
    tensor.zero_grad()
    return GradCheckReport(coords, analytic_full[coords], numeric)


__all__ = ["GradCheckReport", "check_gradient", "numeric_gradient", "FD_STEP"]
