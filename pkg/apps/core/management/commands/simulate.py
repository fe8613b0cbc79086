from apps.core.exceptions import ConfigurationError
from apps.core.options import (
    MODEL_OPTIONS,
    SEED,
    LCRankCommand,
    Option,
    lcrank_setting,
    load_bank,
)
from apps.corpus.services import load_jsonl
from apps.search.replay import simulate_policies
from apps.search.reports import aggregate_report, rows_from_replays, write_results_csv
from apps.termination.policies import IncumbentView, PolicyKind, TerminationPolicy
from apps.termination.replay import write_trace_csv


class Command(LCRankCommand):
    help = "Replay random search on the held-out dataset under each termination policy"

    option_specs = (
        Option("--corpus", str, None, "Corpus JSONL", required=True),
        Option("--holdout", str, None, "Held-out dataset id", required=True),
        Option("--policy", str, PolicyKind.values, choices=PolicyKind.values, multiple=True),
        Option("--delta", float, lambda: lcrank_setting("DELTA", 0.45)),
        Option("--cadence", int, lambda: lcrank_setting("CADENCE", 3)),
        Option(
            "--incumbent-view",
            str,
            IncumbentView.TRUNCATED,
            choices=IncumbentView.values,
        ),
        Option("--seeds", int, 5, "Number of order seeds: seed, seed+1, ..."),
        Option("--runs", int, None, "Runs per search (default: the whole dataset)"),
        Option("--bank-dir", str, None, "Checkpoints written by the train command"),
        Option("--out", str, None, "Results CSV", required=True),
        Option("--trace-out", str, None, "Decision trace CSV"),
        *MODEL_OPTIONS,
        SEED,
    )

    def run(self, values):
        corpus = load_jsonl(values["corpus"])
        policies = [
            TerminationPolicy(
                kind=kind,
                delta=values["delta"],
                cadence=values["cadence"],
                interval=values["cadence"],
                incumbent_view=values["incumbent_view"],
            )
            for kind in dict.fromkeys(values["policy"])
        ]
        if values["runs"] is not None and values["runs"] < 1:
            raise ConfigurationError("--runs must be >= 1")
        bank = None
        if any(p.needs_model for p in policies):
            bank = load_bank(values, corpus)
        seeds = [values["seed"] + i for i in range(values["seeds"])]
        results = simulate_policies(
            corpus, values["holdout"], policies, seeds, bank=bank, runs=values["runs"]
        )
        path = write_results_csv(rows_from_replays(results), values["out"], header=self.header)
        if values["trace_out"]:
            decisions = [d for r in results for d in r.decisions]
            write_trace_csv(decisions, values["trace_out"], header=self._header_lines())
        for row in aggregate_report(results):
            speedup = "-" if row.speedup is None else f"{row.speedup:.2f}x"
            self.stdout.write(
                f"{row.policy:>10}: regret {row.regret:.4f}  epochs {row.epochs:.0f}  {speedup}"
            )
        self.done(f"Wrote {path}")

    def _header_lines(self) -> list[str]:
        return [f"{k}={v}" for k, v in self.header.items()]
