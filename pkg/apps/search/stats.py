# apps/search/stats.py
from __future__ import annotations

from collections.abc import Sequence

import numpy as np
from scipy.stats import rankdata

from .exceptions import UndefinedCorrelationError


def average_ranks(values: Sequence[float]) -> np.ndarray:
    """1-based ranks; tied values share the mean of the ranks they span."""
    return rankdata(np.asarray(values, dtype=np.float64), method="average")


def spearman(a: Sequence[float], b: Sequence[float]) -> float:
    """
    Spearman rank correlation: the Pearson correlation of the average-rank vectors.

    Raises UndefinedCorrelationError for fewer than two points or when either side has
    no rank variance (all values tied).
    """
    if len(a) != len(b):
        raise ValueError(f"length mismatch: {len(a)} vs {len(b)}")
    if len(a) < 2:
        raise UndefinedCorrelationError()
    ra = average_ranks(a)
    rb = average_ranks(b)
    ra = ra - ra.mean()
    rb = rb - rb.mean()
    denom = float(np.sqrt(np.dot(ra, ra) * np.dot(rb, rb)))
    if denom == 0.0:
        raise UndefinedCorrelationError()
    rho = float(np.dot(ra, rb) / denom)
    return min(1.0, max(-1.0, rho))


def mean_and_sd(values: Sequence[float]) -> tuple[float, float]:
    """Mean and population standard deviation; NaN for an empty sample."""
    if not len(values):
        return float("nan"), float("nan")
    arr = np.asarray(values, dtype=np.float64)
    return float(arr.mean()), float(arr.std())


__all__ = ["average_ranks", "spearman", "mean_and_sd"]
