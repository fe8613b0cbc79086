from apps.core.exceptions import ConfigurationError
from apps.core.options import (
    MODEL_OPTIONS,
    SEED,
    LCRankCommand,
    Option,
    model_config,
)
from apps.corpus.services import load_jsonl
from apps.ranker.config import Ablation
from apps.search.ranking import (
    DEFAULT_REPETITIONS,
    DEFAULT_TEST_RUNS,
    DEFAULT_TRAIN_RUNS,
    LENGTH_FRACTIONS,
    Scorer,
    ranking_experiment,
)
from apps.search.reports import rows_from_ranking, write_results_csv


def ablation_label(scorer: str, ablation: str) -> str:
    if scorer != Scorer.LCRANKNET or ablation == Ablation.FULL:
        return str(scorer)
    return f"{scorer}/{ablation}"


class Command(LCRankCommand):
    help = "Spearman correlation of ranker scores with true finals against observed length"

    option_specs = (
        Option("--corpus", str, None, "Corpus JSONL", required=True),
        Option("--holdout", str, None, "Held-out dataset id", required=True),
        Option("--scorer", str, Scorer.LCRANKNET, choices=Scorer.values),
        Option("--repetitions", int, DEFAULT_REPETITIONS, "Seeds seed, seed+1, ..."),
        Option("--test-runs", int, DEFAULT_TEST_RUNS),
        Option("--train-runs", int, DEFAULT_TRAIN_RUNS),
        Option("--fractions", float, list(LENGTH_FRACTIONS), "Observed fractions", multiple=True),
        Option("--out", str, None, "Results CSV", required=True),
        *(option for option in MODEL_OPTIONS if option.dest != "ablation"),
        Option(
            "--ablation",
            str,
            [Ablation.FULL],
            "Ranker variants to compare (repeatable)",
            choices=Ablation.values,
            multiple=True,
        ),
        SEED,
    )

    def run(self, values):
        if any(not 0.0 <= f <= 1.0 for f in values["fractions"]):
            raise ConfigurationError(f"fractions must lie in [0, 1], got {values['fractions']}")
        corpus = load_jsonl(values["corpus"])
        seeds = [values["seed"] + i for i in range(values["repetitions"])]
        scorer = values["scorer"]
        # ablations only change the trained ranker
        ablations = values["ablation"] if scorer == Scorer.LCRANKNET else [Ablation.FULL]
        rows = []
        for ablation in dict.fromkeys(ablations):
            result = ranking_experiment(
                corpus,
                values["holdout"],
                model_config({**values, "ablation": ablation}),
                seeds,
                scorer=scorer,
                n_test=values["test_runs"],
                n_train=values["train_runs"],
                fractions=values["fractions"],
            )
            label = ablation_label(scorer, ablation)
            rows.extend(rows_from_ranking(result, policy=label))
            for point in result.points:
                summary = f"{point.mean:.3f} ± {point.sd:.3f}" if point.defined else "undefined"
                self.stdout.write(f"{label} {point.fraction:.2f} (l={point.length}): {summary}")
        path = write_results_csv(rows, values["out"], header=self.header)
        self.done(f"Wrote {path}")
