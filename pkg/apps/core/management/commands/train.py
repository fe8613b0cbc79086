from apps.core.options import (
    MODEL_OPTIONS,
    SEED,
    LCRankCommand,
    Option,
    lcrank_setting,
    model_config,
    parse_lengths,
)
from apps.corpus.services import load_jsonl, lodo_split
from apps.ranker.bank import RankerBank


def default_lengths() -> str:
    return f"cadence:{lcrank_setting('CADENCE', 3)}"


class Command(LCRankCommand):
    help = "Train the per-length ranking models on every dataset except the held-out one"

    option_specs = (
        Option("--corpus", str, None, "Corpus JSONL", required=True),
        Option("--holdout", str, None, "Held-out dataset id", required=True),
        Option("--lengths", str, default_lengths, "Comma list or cadence:N"),
        Option("--out-dir", str, None, "Checkpoint directory", required=True),
        *MODEL_OPTIONS,
        SEED,
    )

    def run(self, values):
        corpus = load_jsonl(values["corpus"])
        train, held = lodo_split(corpus, values["holdout"])
        epochs = min(r.length for r in held)
        lengths = parse_lengths(values["lengths"], epochs)
        bank = RankerBank(model_config(values), train_records=train)
        bank.train(lengths)
        manifest = bank.save(values["out_dir"], holdout=values["holdout"])
        self.done(f"Trained {len(lengths)} models; manifest at {manifest}")
