from apps.core.options import (
    MODEL_OPTIONS,
    SEED,
    LCRankCommand,
    Option,
    lcrank_setting,
    load_bank,
)
from apps.corpus.services import load_jsonl, lodo_split
from apps.search.evolution import EvolutionConfig, regularized_evolution
from apps.search.reports import row_from_evolution, write_incumbent_trace, write_results_csv
from apps.termination.policies import PolicyKind, TerminationPolicy


class Command(LCRankCommand):
    help = "Regularized evolution over the held-out dataset's runs with early termination"

    option_specs = (
        Option("--corpus", str, None, "Corpus JSONL", required=True),
        Option("--holdout", str, None, "Dataset whose runs form the search space", required=True),
        Option(
            "--policy",
            str,
            PolicyKind.LCRANKNET,
            choices=[PolicyKind.LCRANKNET, PolicyKind.LAST_VALUE, PolicyKind.NONE],
        ),
        Option("--delta", float, lambda: lcrank_setting("DELTA", 0.45)),
        Option("--cadence", int, lambda: lcrank_setting("CADENCE", 3)),
        Option("--population", int, 10),
        Option("--tournament", int, 3),
        Option("--mutation-rate", float, 0.0),
        Option("--budget", int, 100, "Number of evaluated configurations"),
        Option("--bank-dir", str, None, "Checkpoints written by the train command"),
        Option("--out", str, None, "Results CSV", required=True),
        Option("--trace-out", str, None, "Incumbent trace CSV"),
        *MODEL_OPTIONS,
        SEED,
    )

    def run(self, values):
        # the evolution objective reads the final-performance head
        values["final_head"] = self.header["final_head"] = True
        corpus = load_jsonl(values["corpus"])
        _, runs = lodo_split(corpus, values["holdout"])
        policy = TerminationPolicy(
            kind=values["policy"], delta=values["delta"], cadence=values["cadence"]
        )
        config = EvolutionConfig(
            population=values["population"],
            tournament=values["tournament"],
            mutation_rate=values["mutation_rate"],
            budget=values["budget"],
            seed=values["seed"],
        )
        bank = None
        if policy.needs_model:
            bank = load_bank(values, corpus, require_final_head=True)
        result = regularized_evolution(runs, policy, config, bank=bank)

        row = row_from_evolution(result, runs, policy=policy.name, seed=config.seed)
        path = write_results_csv([row], values["out"], header=self.header)
        if values["trace_out"]:
            write_incumbent_trace(result, values["trace_out"], header=self.header)
        self.stdout.write(
            f"best {result.best.run.run_id}: regret {row.regret:.4f} after "
            f"{result.evaluations} evaluations / {result.epochs_consumed} epochs"
        )
        self.done(f"Wrote {path}")
