# apps/termination/policies.py
from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass

from django.conf import settings
from django.db import models

from apps.corpus.exceptions import DegenerateDatasetError
from apps.corpus.records import NormalizationStats, RunRecord
from apps.corpus.services import truncate
from apps.ranker.bank import RankerBank

from .exceptions import NoIncumbentError, PolicyConfigurationError
from .state import SearchState

logger = logging.getLogger(__name__)

DEFAULT_DELTA = 0.45
DEFAULT_CADENCE = 3
DEFAULT_ETA = 3


class PolicyKind(models.TextChoices):
    LCRANKNET = "lcranknet", "LCRankNet probability rule"
    LAST_VALUE = "last_value", "Last value"
    SUCCESSIVE_HALVING = "sh", "Successive Halving"
    HYPERBAND = "hyperband", "Hyperband"
    NONE = "none", "No termination"


class IncumbentView(models.TextChoices):
    TRUNCATED = "truncated", "Incumbent truncated to the current length"
    FINAL = "final", "Last epochs of the incumbent's completed curve"


class Action(models.TextChoices):
    CONTINUE = "continue", "Continue"
    STOP = "stop", "Stop"


@dataclass(frozen=True)
class TerminationPolicy:
    kind: str = PolicyKind.NONE
    delta: float = DEFAULT_DELTA
    cadence: int = DEFAULT_CADENCE
    margin: float = 0.0
    interval: int = DEFAULT_CADENCE  # SH resource per round
    max_resource: int | None = None  # Hyperband R; None means the curve length
    eta: int = DEFAULT_ETA
    incumbent_view: str = IncumbentView.TRUNCATED

    def __post_init__(self):
        if self.kind not in PolicyKind.values:
            raise PolicyConfigurationError(f"unknown policy {self.kind!r}")
        if not 0.0 <= self.delta <= 1.0:
            raise PolicyConfigurationError(f"delta must lie in [0, 1], got {self.delta!r}")
        if self.cadence < 1 or self.interval < 1:
            raise PolicyConfigurationError("cadence and interval must be >= 1")
        if self.max_resource is not None and self.max_resource < 1:
            raise PolicyConfigurationError("max_resource must be >= 1")
        if self.eta < 2:
            raise PolicyConfigurationError("eta must be >= 2")
        if self.incumbent_view not in IncumbentView.values:
            raise PolicyConfigurationError(f"unknown incumbent view {self.incumbent_view!r}")

    @classmethod
    def from_settings(cls, kind: str, **overrides) -> TerminationPolicy:
        block = getattr(settings, "LCRANK", {}) or {}
        values = {
            "delta": block.get("DELTA", DEFAULT_DELTA),
            "cadence": block.get("CADENCE", DEFAULT_CADENCE),
            "interval": block.get("CADENCE", DEFAULT_CADENCE),
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(kind=kind, **values)

    @property
    def name(self) -> str:
        return str(self.kind)

    @property
    def is_schedule(self) -> bool:
        """SH and Hyperband allocate epochs to a whole batch of runs at once."""
        return self.kind in (PolicyKind.SUCCESSIVE_HALVING, PolicyKind.HYPERBAND)

    @property
    def needs_model(self) -> bool:
        return self.kind == PolicyKind.LCRANKNET and self.delta > 0.0


@dataclass(frozen=True)
class CheckpointDecision:
    stop: bool
    statistic: float | None = None  # p for lcranknet, best partial value for last_value
    reason: str = ""

    @property
    def action(self) -> str:
        return Action.STOP if self.stop else Action.CONTINUE


# ----------------------------
# decision rules
# ----------------------------
def last_value_stop(partial: Sequence[float], y_max: float, margin: float = 0.0) -> bool:
    """Stop when even the best value seen so far, plus `margin`, stays below the incumbent."""
    if not len(partial):
        raise PolicyConfigurationError("last-value rule needs at least one observed epoch")
    return max(partial) + margin < y_max


def should_stop_lcranknet(
    record: RunRecord,
    length: int,
    state: SearchState,
    policy: TerminationPolicy,
    bank: RankerBank | None,
    stats: NormalizationStats,
) -> CheckpointDecision:
    """
    Early-termination rule at an observed length: a run whose best value so far beats the
    incumbent always continues; otherwise it stops when P(run beats incumbent) <= delta.
    """
    if not state.has_incumbent:
        raise NoIncumbentError()
    partial = truncate(record, length)
    best = max(record.oriented(v) for v in partial)
    if best > state.y_max:
        return CheckpointDecision(False, None, "max_branch")
    if policy.delta <= 0.0:
        return CheckpointDecision(False, None, "delta_zero")
    if bank is None:
        raise PolicyConfigurationError("the lcranknet policy needs a ranker bank")
    model = bank.get(length).with_stats(stats)
    try:
        p = model.probability(
            record,
            state.incumbent,
            other_tail=policy.incumbent_view == IncumbentView.FINAL,
        )
    except DegenerateDatasetError:
        # nothing to normalize against yet; delta >= 1 stops regardless of p
        return CheckpointDecision(policy.delta >= 1.0, None, "degenerate")
    stop = policy.delta >= 1.0 or p <= policy.delta
    return CheckpointDecision(stop, p, "probability")


def should_stop_last_value(
    record: RunRecord, length: int, state: SearchState, policy: TerminationPolicy
) -> CheckpointDecision:
    if not state.has_incumbent:
        raise NoIncumbentError()
    partial = [record.oriented(v) for v in truncate(record, length)]
    stop = last_value_stop(partial, state.y_max, policy.margin)
    return CheckpointDecision(stop, max(partial), "last_value")


__all__ = [
    "PolicyKind",
    "IncumbentView",
    "Action",
    "TerminationPolicy",
    "CheckpointDecision",
    "last_value_stop",
    "should_stop_lcranknet",
    "should_stop_last_value",
]
