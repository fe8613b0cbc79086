from apps.core.options import SEED, LCRankCommand, Option
from apps.corpus.services import save_jsonl
from apps.corpus.synthetic import SearchSpace, SyntheticSpec, synth_generate


class Command(LCRankCommand):
    help = "Generate a synthetic learning-curve corpus as JSONL"

    option_specs = (
        Option("--out", str, None, "Output JSONL path", required=True),
        Option("--datasets", int, 5, "Number of datasets"),
        Option("--runs", int, 100, "Runs per dataset"),
        Option("--epochs", int, 100, "Curve length"),
        Option("--noise", float, 0.0, "Gaussian noise sd added to every epoch"),
        Option("--search-space", str, SearchSpace.TOY, choices=SearchSpace.values),
        SEED,
    )

    def run(self, values):
        spec = SyntheticSpec(
            n_datasets=values["datasets"],
            runs_per_dataset=values["runs"],
            epochs=values["epochs"],
            noise_sd=values["noise"],
            seed=values["seed"],
            search_space=values["search_space"],
        )
        corpus = synth_generate(spec)
        path = save_jsonl(corpus, values["out"])
        self.done(f"Wrote {len(corpus)} records to {path}")
