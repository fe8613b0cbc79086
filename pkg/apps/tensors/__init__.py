"""Float64 tensors with reverse-mode differentiation, the layers the ranker needs, and Adam."""

from .optim import AdamState, adam_step
from .tensor import Graph, Tensor, backward

__all__ = ["Tensor", "Graph", "backward", "AdamState", "adam_step"]
