# apps/search/reports.py
from __future__ import annotations

import csv
import logging
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from pathlib import Path

from django.db import models

from apps.core.exceptions import CorpusIOError
from apps.corpus.exceptions import CorpusValidationError
from apps.corpus.records import NormalizationStats, RunRecord
from apps.termination.policies import PolicyKind

from .evolution import EvolutionResult
from .ranking import RankingEvalResult
from .replay import ReplayResult, reference_run, regret

logger = logging.getLogger(__name__)

RESULT_COLUMNS = (
    "protocol",
    "dataset",
    "policy",
    "seed",
    "length_fraction",
    "spearman",
    "regret",
    "epochs",
)
SUMMARY_COLUMNS = ("dataset", "policy", "runs", "regret", "epochs", "speedup")
INCUMBENT_TRACE_COLUMNS = (
    "evaluation",
    "run_id",
    "cumulative_epochs",
    "objective",
    "terminated",
    "incumbent_run_id",
    "incumbent_objective",
)


class Protocol(models.TextChoices):
    RANK = "rank", "Ranking quality vs. curve length"
    SIMULATE = "simulate", "Random-search replay"
    OPTIMIZE = "optimize", "Regularized evolution"


# ----------------------------
# rows
# ----------------------------
@dataclass(frozen=True)
class ResultRow:
    protocol: str
    dataset: str
    policy: str
    seed: int
    length_fraction: float | None = None
    spearman: float | None = None
    regret: float | None = None
    epochs: int | None = None

    def as_csv(self) -> list[str]:
        def cell(value) -> str:
            if value is None:
                return ""
            return repr(float(value)) if isinstance(value, float) else str(value)

        return [cell(getattr(self, name)) for name in RESULT_COLUMNS]

    @classmethod
    def from_csv(cls, row: Mapping[str, str], *, line: int | None = None) -> ResultRow:
        def opt(name: str, kind):
            value = (row.get(name) or "").strip()
            return kind(value) if value else None

        try:
            return cls(
                protocol=row["protocol"],
                dataset=row["dataset"],
                policy=row["policy"],
                seed=int(row["seed"]),
                length_fraction=opt("length_fraction", float),
                spearman=opt("spearman", float),
                regret=opt("regret", float),
                epochs=opt("epochs", int),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise CorpusValidationError(f"malformed result row: {exc}", line=line) from exc


def rows_from_ranking(
    result: RankingEvalResult, policy: str | None = None
) -> list[ResultRow]:
    return [
        ResultRow(
            protocol=Protocol.RANK,
            dataset=result.dataset_id,
            policy=policy or result.scorer,
            seed=seed,
            length_fraction=point.fraction,
            spearman=value,
        )
        for seed, point, value in result.per_seed()
    ]


def rows_from_replays(results: Iterable[ReplayResult]) -> list[ResultRow]:
    return [
        ResultRow(
            protocol=Protocol.SIMULATE,
            dataset=r.dataset_id,
            policy=r.policy,
            seed=r.order_seed,
            regret=r.regret,
            epochs=r.epochs_consumed,
        )
        for r in results
    ]


def row_from_evolution(
    result: EvolutionResult, runs: Sequence[RunRecord], *, policy: str, seed: int
) -> ResultRow:
    """Regret of the true final of the run evolution settled on against the pool optimum."""
    stats = NormalizationStats.from_records(runs)
    return ResultRow(
        protocol=Protocol.OPTIMIZE,
        dataset=result.best.run.dataset_id,
        policy=policy,
        seed=seed,
        regret=regret(stats, reference_run(runs), result.best.run),
        epochs=result.epochs_consumed,
    )


# ----------------------------
# aggregation
# ----------------------------
@dataclass(frozen=True)
class SummaryRow:
    dataset: str
    policy: str
    runs: int
    regret: float
    epochs: float
    speedup: float | None

    def as_csv(self) -> list[str]:
        speedup = "" if self.speedup is None else repr(self.speedup)
        return [
            self.dataset,
            self.policy,
            str(self.runs),
            repr(self.regret),
            repr(self.epochs),
            speedup,
        ]


def aggregate_report(results: Iterable[ResultRow | ReplayResult]) -> list[SummaryRow]:
    """
    Mean regret and epochs per (dataset, policy), with speedup = epochs(none) / epochs(policy)
    when the dataset has a no-termination row. Rows come sorted by (dataset, policy).
    """
    rows = [r for r in _as_rows(results) if r.regret is not None and r.epochs is not None]
    if not rows:
        raise ValueError("aggregate_report needs at least one replay result")
    cells: dict[tuple[str, str], list[ResultRow]] = {}
    for row in rows:
        cells.setdefault((row.dataset, row.policy), []).append(row)

    means = {
        key: (
            sum(r.regret for r in group) / len(group),
            sum(r.epochs for r in group) / len(group),
        )
        for key, group in cells.items()
    }
    summary = []
    for (dataset, policy), group in sorted(cells.items()):
        mean_regret, mean_epochs = means[(dataset, policy)]
        baseline = means.get((dataset, str(PolicyKind.NONE)))
        speedup = None
        if baseline is not None and mean_epochs > 0:
            speedup = baseline[1] / mean_epochs
        summary.append(
            SummaryRow(dataset, policy, len(group), mean_regret, mean_epochs, speedup)
        )
    return summary


def correlation_series(
    rows: Iterable[ResultRow],
) -> dict[tuple[str, str], list[tuple[float, float]]]:
    """Mean defined Spearman per length fraction, keyed by (dataset, scorer)."""
    cells: dict[tuple[str, str], dict[float, list[float]]] = {}
    for row in rows:
        if row.protocol != Protocol.RANK or row.length_fraction is None:
            continue
        by_fraction = cells.setdefault((row.dataset, row.policy), {})
        values = by_fraction.setdefault(row.length_fraction, [])
        if row.spearman is not None:
            values.append(row.spearman)
    return {
        key: [(f, sum(v) / len(v)) for f, v in sorted(by_fraction.items()) if v]
        for key, by_fraction in sorted(cells.items())
    }


def _as_rows(results: Iterable[ResultRow | ReplayResult]) -> list[ResultRow]:
    rows: list[ResultRow] = []
    for r in results:
        rows.extend(rows_from_replays([r]) if isinstance(r, ReplayResult) else [r])
    return rows


# ----------------------------
# CSV
# ----------------------------
def _write_csv(
    path: str | Path,
    columns: Sequence[str],
    rows: Iterable[Sequence[str]],
    header: Mapping[str, object],
) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="") as fh:
            for key, value in header.items():
                fh.write(f"# {key}={value}\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(columns)
            writer.writerows(rows)
    except OSError as exc:
        raise CorpusIOError(f"cannot write {path}: {exc}") from exc
    logger.info("Wrote %s", path)
    return path


def write_results_csv(
    rows: Iterable[ResultRow], path: str | Path, *, header: Mapping[str, object] | None = None
) -> Path:
    """Result rows, preceded by the resolved configuration as `# key=value` comment lines."""
    return _write_csv(path, RESULT_COLUMNS, (r.as_csv() for r in rows), header or {})


def write_summary_csv(
    rows: Iterable[SummaryRow], path: str | Path, *, header: Mapping[str, object] | None = None
) -> Path:
    return _write_csv(path, SUMMARY_COLUMNS, (r.as_csv() for r in rows), header or {})


def write_incumbent_trace(
    result: EvolutionResult, path: str | Path, *, header: Mapping[str, object] | None = None
) -> Path:
    rows = (
        [
            str(p.evaluation),
            p.run_id,
            str(p.cumulative_epochs),
            repr(p.objective),
            str(int(p.terminated)),
            p.incumbent_run_id,
            repr(p.incumbent_objective),
        ]
        for p in result.trace
    )
    return _write_csv(path, INCUMBENT_TRACE_COLUMNS, rows, header or {})


def read_results_csv(path: str | Path) -> tuple[dict[str, str], list[ResultRow]]:
    path = Path(path)
    header: dict[str, str] = {}
    body: list[tuple[int, str]] = []
    try:
        with path.open(encoding="utf-8", newline="") as fh:
            for number, line in enumerate(fh, start=1):
                if line.startswith("#"):
                    key, _, value = line[1:].strip().partition("=")
                    header[key.strip()] = value.strip()
                elif line.strip():
                    body.append((number, line))
    except OSError as exc:
        raise CorpusIOError(f"cannot read {path}: {exc}") from exc

    reader = csv.DictReader([line for _, line in body])
    missing = set(RESULT_COLUMNS) - set(reader.fieldnames or ())
    if missing:
        raise CorpusValidationError(f"{path} lacks columns {sorted(missing)}")
    rows = [
        ResultRow.from_csv(row, line=number)
        for (number, _), row in zip(body[1:], reader)
    ]
    return header, rows


__all__ = [
    "RESULT_COLUMNS",
    "SUMMARY_COLUMNS",
    "Protocol",
    "ResultRow",
    "SummaryRow",
    "rows_from_ranking",
    "rows_from_replays",
    "row_from_evolution",
    "aggregate_report",
    "correlation_series",
    "write_results_csv",
    "write_summary_csv",
    "write_incumbent_trace",
    "INCUMBENT_TRACE_COLUMNS",
    "read_results_csv",
]
