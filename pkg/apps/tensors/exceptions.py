from __future__ import annotations

from collections.abc import Sequence

from apps.core.exceptions import NumericalError, UsageError


class TensorError(UsageError):
    """Base class for tensor failures; remembers the op and the offending shapes."""

    def __init__(self, op: str, message: str, shapes: Sequence[tuple[int, ...]] = ()):
        self.op = op
        self.shapes = tuple(tuple(s) for s in shapes)
        detail = f" (shapes: {', '.join(str(s) for s in self.shapes)})" if self.shapes else ""
        super().__init__(f"{op}: {message}{detail}")


class ShapeError(TensorError):
    pass


class DomainError(TensorError, NumericalError):
    exit_code = NumericalError.exit_code


class EmbeddingIndexError(TensorError, IndexError):
    pass


class EmptySequenceError(TensorError):
    pass


class NonScalarLossError(TensorError):
    pass
