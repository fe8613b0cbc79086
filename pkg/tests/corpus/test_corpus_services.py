import json

import numpy as np
import pytest

from apps.core.exceptions import CorpusIOError
from apps.corpus.exceptions import (
    CorpusValidationError,
    DegenerateDatasetError,
    DuplicateRunError,
    EmptyCorpusError,
    SchemaVersionError,
    TruncationRangeError,
    UnknownDatasetError,
)
from apps.corpus.records import Corpus, MetricOrientation, NormalizationStats
from apps.corpus.services import (
    load_jsonl,
    lodo_split,
    normalize,
    normalized_final,
    record_to_dict,
    save_jsonl,
    truncate,
)


# ----------------------------
# JSON Lines
# ----------------------------
def test_save_and_load_preserve_records(tiny_corpus, tmp_path):
    path = save_jsonl(tiny_corpus, tmp_path / "out" / "c.jsonl")
    loaded = load_jsonl(path)
    assert loaded.records == tiny_corpus.records
    assert loaded.dataset_ids == tiny_corpus.dataset_ids
    again = save_jsonl(loaded, tmp_path / "again.jsonl")
    assert path.read_bytes() == again.read_bytes()


def test_floats_survive_bit_exactly(make_record, tmp_path):
    record = make_record(curve=(0.1 + 0.2, 1 / 3, 2.5e-17))
    path = save_jsonl(Corpus.from_records([record]), tmp_path / "c.jsonl")
    assert load_jsonl(path).records[0].curve == record.curve


def test_floats_are_written_with_seventeen_significant_digits(make_record, tmp_path):
    record = make_record(curve=(1 / 3, 0.5))
    path = save_jsonl(Corpus.from_records([record]), tmp_path / "c.jsonl")
    text = path.read_text(encoding="utf-8")
    assert f'"curve": [{format(1 / 3, ".17g")}, 0.5]' in text
    assert json.loads(text)["curve"] == [1 / 3, 0.5]


def test_string_arch_tokens_are_not_split_into_characters(make_record, tmp_path):
    payload = {**record_to_dict(make_record()), "arch_tokens": "conv3x3"}
    with pytest.raises(CorpusValidationError, match="arch_tokens must be a JSON array"):
        load_jsonl(_write_lines(tmp_path / "c.jsonl", [payload]))


def test_missing_file_is_an_io_error(tmp_path):
    with pytest.raises(CorpusIOError):
        load_jsonl(tmp_path / "nope.jsonl")


def _write_lines(path, payloads):
    path.write_text(
        "\n".join(p if isinstance(p, str) else json.dumps(p) for p in payloads) + "\n",
        encoding="utf-8",
    )
    return path


def test_malformed_json_reports_line(make_record, tmp_path):
    good = record_to_dict(make_record())
    path = _write_lines(tmp_path / "c.jsonl", [good, "{not json"])
    with pytest.raises(CorpusValidationError) as exc:
        load_jsonl(path)
    assert exc.value.line == 2


def test_unknown_schema_version(make_record, tmp_path):
    payload = {**record_to_dict(make_record()), "schema_version": 99}
    with pytest.raises(SchemaVersionError):
        load_jsonl(_write_lines(tmp_path / "c.jsonl", [payload]))


def test_duplicate_run_id_names_run_and_line(make_record, tmp_path):
    payload = record_to_dict(make_record("dup"))
    with pytest.raises(DuplicateRunError) as exc:
        load_jsonl(_write_lines(tmp_path / "c.jsonl", [payload, payload]))
    assert exc.value.run_id == "dup"
    assert exc.value.line == 2


@pytest.mark.parametrize(
    "change",
    [
        {"curve": []},
        {"arch_tokens": []},
        {"metric_orientation": "sideways"},
        {"dataset_id": ""},
    ],
)
def test_invalid_records_are_rejected(make_record, tmp_path, change):
    payload = {**record_to_dict(make_record()), **change}
    with pytest.raises(CorpusValidationError):
        load_jsonl(_write_lines(tmp_path / "c.jsonl", [payload]))


def test_missing_field(make_record, tmp_path):
    payload = record_to_dict(make_record())
    del payload["curve"]
    with pytest.raises(CorpusValidationError, match="missing fields"):
        load_jsonl(_write_lines(tmp_path / "c.jsonl", [payload]))


def test_hparam_keys_must_agree(make_record):
    a = make_record("a", hparams={"learning_rate": 0.1})
    b = make_record("b", hparams={"batch_size": 32.0})
    with pytest.raises(CorpusValidationError):
        Corpus.from_records([a, b])


def test_empty_corpus(tmp_path):
    (tmp_path / "c.jsonl").write_text("\n", encoding="utf-8")
    with pytest.raises(EmptyCorpusError):
        load_jsonl(tmp_path / "c.jsonl")


def test_vocabulary_orders_by_frequency_then_token(make_record):
    corpus = Corpus.from_records(
        [
            make_record("a", tokens=("pool", "conv3")),
            make_record("b", tokens=("conv3", "zero")),
        ]
    )
    assert corpus.vocabulary == {"conv3": 0, "pool": 1, "zero": 2}


# ----------------------------
# truncation and normalization
# ----------------------------
def test_truncate(make_record):
    record = make_record(curve=(0.1, 0.2, 0.3))
    assert truncate(record, 0) == ()
    assert truncate(record, 2) == (0.1, 0.2)
    assert truncate(record, 3) == record.curve
    with pytest.raises(TruncationRangeError):
        truncate(record, 4)


def test_normalize_examples(make_record):
    record = make_record(curve=(0.2, 0.5, 0.8))
    stats = NormalizationStats.from_records([record])
    np.testing.assert_allclose(normalize(None, stats, record, 3), [0.0, 0.5, 1.0])
    assert normalize(None, stats, record, 0).size == 0


def test_normalize_flips_lower_better(make_record):
    record = make_record(curve=(2.0, 1.5, 1.0), orientation=MetricOrientation.LOWER_BETTER)
    stats = NormalizationStats.from_records([record])
    np.testing.assert_allclose(normalize(None, stats, record, 3), [0.0, 0.5, 1.0])
    assert normalized_final(stats, record) == 1.0


def test_normalize_clamps_out_of_range_values(make_record):
    seen = make_record("a", curve=(0.0, 1.0))
    stats = NormalizationStats.from_records([seen])
    wider = make_record("b", curve=(-0.5, 2.0))
    np.testing.assert_array_equal(normalize(None, stats, wider, 2), [0.0, 1.0])


def test_normalize_degenerate_dataset(make_record):
    record = make_record(curve=(0.4, 0.4))
    with pytest.raises(DegenerateDatasetError):
        normalize(None, NormalizationStats.from_records([record]), record, 2)


def test_normalize_unknown_dataset(make_record):
    known = make_record("a", dataset_id="d0")
    corpus = Corpus.from_records([known])
    stats = NormalizationStats.from_records([known])
    with pytest.raises(UnknownDatasetError):
        normalize(corpus, stats, make_record("b", dataset_id="elsewhere"), 1)


def test_denormalize_inverts_scaling(make_record):
    for orientation, curve in (
        (MetricOrientation.HIGHER_BETTER, (0.2, 0.6)),
        (MetricOrientation.LOWER_BETTER, (0.6, 0.2)),
    ):
        record = make_record(curve=curve, orientation=orientation)
        stats = NormalizationStats.from_records([record])
        span = stats.range_for("d0")
        scaled = normalized_final(stats, record)
        assert span.denormalize(scaled) == pytest.approx(record.final)


def test_stats_extended_registers_new_dataset():
    stats = NormalizationStats().extended("fresh", [0.3, 0.1])
    assert stats.range_for("fresh").min_value == 0.1
    assert NormalizationStats().extended("fresh", []) == NormalizationStats()


# ----------------------------
# splitting
# ----------------------------
def test_lodo_split_partitions_in_corpus_order(tiny_corpus):
    held = tiny_corpus.dataset_ids[1]
    train, test = lodo_split(tiny_corpus, held)
    assert all(r.dataset_id != held for r in train)
    assert all(r.dataset_id == held for r in test)
    assert len(train) + len(test) == len(tiny_corpus)
    merged = sorted(train + test, key=tiny_corpus.records.index)
    assert tuple(merged) == tiny_corpus.records
    assert list(test) == [r for r in tiny_corpus if r.dataset_id == held]


def test_lodo_split_unknown_dataset(tiny_corpus):
    with pytest.raises(UnknownDatasetError):
        lodo_split(tiny_corpus, "mnist")
