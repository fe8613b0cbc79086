from pathlib import Path

from apps.core.charts import Panel, Series, bar_panels, line_chart
from apps.core.exceptions import CorpusIOError
from apps.core.options import LCRankCommand, Option
from apps.search.reports import (
    Protocol,
    aggregate_report,
    correlation_series,
    read_results_csv,
    write_summary_csv,
)


class Command(LCRankCommand):
    help = "Turn result CSVs into SVG charts and a summary.csv"

    option_specs = (
        Option("--results", str, None, "Result CSV (repeatable)", multiple=True, required=True),
        Option("--out-dir", str, None, "Directory for charts and summary", required=True),
    )

    def run(self, values):
        rows = []
        for path in values["results"]:
            _, found = read_results_csv(path)
            rows.extend(found)
        out_dir = Path(values["out_dir"])
        written = []

        series = correlation_series(rows)
        if series:
            chart = line_chart(
                "Ranking quality vs. observed curve length",
                [
                    Series(f"{dataset} / {scorer}", tuple((100 * f, m) for f, m in points))
                    for (dataset, scorer), points in series.items()
                ],
                x_label="observed length (% of epochs)",
                y_label="mean Spearman",
                y_range=(-1.0, 1.0),
            )
            written.append(self._write(out_dir / f"{Protocol.RANK.value}.svg", chart))

        summary_rows = []
        for protocol in (Protocol.SIMULATE, Protocol.OPTIMIZE):
            selected = [r for r in rows if r.protocol == protocol]
            if not selected:
                continue
            summary = aggregate_report(selected)
            summary_rows.extend(summary)
            several = len({s.dataset for s in summary}) > 1
            labels = [f"{s.dataset}/{s.policy}" if several else s.policy for s in summary]
            chart = bar_panels(
                f"{protocol.label}: regret and epochs per policy",
                [
                    Panel("regret (normalized)", tuple(zip(labels, [s.regret for s in summary]))),
                    Panel("epochs consumed", tuple(zip(labels, [s.epochs for s in summary]))),
                ],
            )
            written.append(self._write(out_dir / f"{protocol.value}.svg", chart))

        if summary_rows:
            written.append(
                write_summary_csv(summary_rows, out_dir / "summary.csv", header=self.header)
            )
        self.done(f"Wrote {len(written)} files to {out_dir}")

    def _write(self, path: Path, content: str) -> Path:
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(content, encoding="utf-8")
        except OSError as exc:
            raise CorpusIOError(f"cannot write {path}: {exc}") from exc
        return path
