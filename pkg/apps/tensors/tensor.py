# apps/tensors/tensor.py
"""
Dense float64 tensors recorded on a define-by-run graph.

A `Tensor` remembers the tensors it was computed from and a closure that pushes its
gradient back into them. `Graph.trace(loss)` orders every recorded node so that inputs
precede the nodes that consume them; `backward` walks that order in reverse.
"""

from __future__ import annotations

from collections.abc import Callable, Iterable, Mapping, Sequence

import numpy as np

from .exceptions import NonScalarLossError, ShapeError

BackwardFn = Callable[[np.ndarray], None]


class Tensor:
    __slots__ = ("data", "requires_grad", "grad", "op", "_parents", "_backward")

    def __init__(
        self,
        data,
        requires_grad: bool = False,
        *,
        op: str = "leaf",
        parents: Sequence[Tensor] = (),
        backward: BackwardFn | None = None,
    ):
        arr = np.array(data, dtype=np.float64)
        if any(dim < 1 for dim in arr.shape):
            raise ShapeError(op, "every dimension must be positive", [arr.shape])
        self.data: np.ndarray = arr
        self.requires_grad = bool(requires_grad)
        self.grad: np.ndarray | None = None
        self.op = op
        self._parents: tuple[Tensor, ...] = tuple(parents)
        self._backward = backward

    # ---------- introspection ----------
    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def values(self) -> np.ndarray:
        """Row-major flat view of the data."""
        return self.data.reshape(-1)

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError("item", "only single-element tensors convert to float", [self.shape])
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.data.copy()

    def zero_grad(self) -> None:
        self.grad = None

    def detach(self) -> Tensor:
        return Tensor(self.data)

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}, op={self.op!r}{flag})"

    def backward(self) -> None:
        backward(self)

    # ---------- operators ----------
    def __add__(self, other):
        return ops.add(self, other)

    def __radd__(self, other):
        return ops.add(other, self)

    def __sub__(self, other):
        return ops.sub(self, other)

    def __rsub__(self, other):
        return ops.sub(other, self)

    def __mul__(self, other):
        return ops.mul(self, other)

    def __rmul__(self, other):
        return ops.mul(other, self)

    def __neg__(self):
        return ops.mul(self, -1.0)

    def __matmul__(self, other):
        return ops.matmul(self, other)


def as_tensor(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def make_result(
    data: np.ndarray, op: str, parents: Sequence[Tensor], backward_fn: BackwardFn
) -> Tensor:
    """Wrap an op output; only record the graph edge when some input needs gradients."""
    if any(p.requires_grad for p in parents):
        return Tensor(data, requires_grad=True, op=op, parents=parents, backward=backward_fn)
    return Tensor(data, op=op)


def accumulate(tensor: Tensor, grad: np.ndarray) -> None:
    if not tensor.requires_grad:
        return
    grad = np.asarray(grad, dtype=np.float64).reshape(tensor.shape)
    tensor.grad = grad.copy() if tensor.grad is None else tensor.grad + grad


class Graph:
    """Nodes reachable from an output, inputs first."""

    def __init__(self, nodes: Iterable[Tensor]):
        self.nodes: tuple[Tensor, ...] = tuple(nodes)

    def __len__(self) -> int:
        return len(self.nodes)

    @classmethod
    def trace(cls, output: Tensor) -> Graph:
        order: list[Tensor] = []
        seen: set[int] = set()
        # iterative post-order; recursion would overflow on long LSTM unrolls
        stack: list[tuple[Tensor, bool]] = [(output, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in reversed(node._parents):
                if parent.requires_grad and id(parent) not in seen:
                    stack.append((parent, False))
        return cls(order)

    def backward(self, loss: Tensor) -> None:
        if loss.data.size != 1:
            raise NonScalarLossError("backward", "loss must be a scalar", [loss.shape])
        for node in self.nodes:
            if node._backward is not None:
                node.grad = None
        loss.grad = np.ones_like(loss.data)
        for node in reversed(self.nodes):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)


def backward(loss: Tensor, wrt: Mapping[str, Tensor] | None = None) -> dict[str, np.ndarray]:
    """
    Reverse-mode accumulation from a scalar loss.

    Leaf gradients accumulate (call `zero_grad` between steps). When `wrt` is given, the
    gradients of those tensors are returned by name; tensors the loss does not depend on
    get zeros.
    """
    if loss.data.size != 1:
        raise NonScalarLossError("backward", "loss must be a scalar", [loss.shape])
    if loss.requires_grad:
        Graph.trace(loss).backward(loss)
    if wrt is None:
        return {}
    return {
        name: (t.grad.copy() if t.grad is not None else np.zeros_like(t.data))
        for name, t in wrt.items()
    }


from apps.tensors import ops  # noqa: E402

__all__ = ["Tensor", "Graph", "as_tensor", "backward", "make_result", "accumulate"]
