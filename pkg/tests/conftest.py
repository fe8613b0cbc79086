# tests/conftest.py
import pytest

from apps.corpus.records import Corpus, MetricOrientation, RunRecord
from apps.corpus.services import save_jsonl
from apps.corpus.synthetic import SyntheticSpec, synth_generate
from apps.ranker.config import ModelConfig


# ---------- Global fast test tweaks ----------
@pytest.fixture(autouse=True)
def _results_dir(settings, tmp_path):
    settings.LCRANK = {**settings.LCRANK, "RESULTS_DIR": tmp_path / "results"}
    return settings


# ---------- Factories / Fixtures ----------
@pytest.fixture
def make_record():
    def _make(
        run_id="r0",
        curve=(0.1, 0.2, 0.3),
        *,
        dataset_id="d0",
        tokens=("conv3", "pool"),
        hparams=None,
        orientation=MetricOrientation.HIGHER_BETTER,
    ):
        return RunRecord(
            dataset_id=dataset_id,
            run_id=run_id,
            arch_tokens=tuple(tokens),
            hparams=dict(hparams or {"learning_rate": 0.01}),
            curve=tuple(float(v) for v in curve),
            metric_orientation=orientation,
        )

    return _make


@pytest.fixture
def tiny_spec():
    return SyntheticSpec(n_datasets=3, runs_per_dataset=12, epochs=12, noise_sd=0.0, seed=7)


@pytest.fixture
def tiny_corpus(tiny_spec) -> Corpus:
    return synth_generate(tiny_spec)


@pytest.fixture
def corpus_file(tiny_corpus, tmp_path):
    return save_jsonl(tiny_corpus, tmp_path / "corpus.jsonl")


@pytest.fixture
def fast_config() -> ModelConfig:
    """A miniature ranker that trains in well under a second."""
    return ModelConfig(
        curve_kernel_sizes=(1, 2),
        filters_per_kernel=2,
        arch_embed_dim=4,
        arch_hidden_dim=4,
        dataset_embed_dim=2,
        combiner_hidden=6,
        steps=15,
        pairs_per_step=8,
        learning_rate=1e-2,
        seed=3,
        log_every=1000,
    )
