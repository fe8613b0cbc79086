import csv
import json
from io import StringIO
from xml.etree import ElementTree

import pytest
from django.core.management import call_command
from django.core.management.base import CommandError

from apps.core.exceptions import EXIT_IO, EXIT_USAGE
from apps.corpus.services import load_jsonl
from apps.search.reports import read_results_csv

pytestmark = pytest.mark.integration

HOLDOUT = "synth-02"
FAST_MODEL = ["--steps", "3", "--pairs-per-step", "4", "--kernel-sizes", "1,2", "--filters", "2"]


def run(*args):
    out = StringIO()
    call_command(*args, stdout=out)
    return out.getvalue()


def data_rows(path):
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(line for line in fh if not line.startswith("#")))


# ---------- gen_corpus ----------
def test_gen_corpus_is_deterministic(tmp_path):
    first, second = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    args = ["--datasets", "2", "--runs", "4", "--epochs", "6", "--seed", "11"]
    output = run("gen_corpus", "--out", str(first), *args)
    run("gen_corpus", "--out", str(second), *args)
    assert "Wrote 8 records" in output
    assert first.read_bytes() == second.read_bytes()
    corpus = load_jsonl(first)
    assert corpus.dataset_ids == ("synth-00", "synth-01")
    assert {r.length for r in corpus.records} == {6}


def test_gen_corpus_rejects_zero_runs(tmp_path):
    with pytest.raises(CommandError) as info:
        run("gen_corpus", "--out", str(tmp_path / "c.jsonl"), "--runs", "0")
    assert info.value.returncode == EXIT_USAGE


def test_missing_required_option():
    with pytest.raises(CommandError, match="--out is required") as info:
        run("gen_corpus")
    assert info.value.returncode == EXIT_USAGE


# ---------- train ----------
def test_train_writes_one_checkpoint_per_length(corpus_file, tmp_path):
    out_dir = tmp_path / "bank"
    run(
        "train",
        "--corpus",
        str(corpus_file),
        "--holdout",
        HOLDOUT,
        "--lengths",
        "0,3,6",
        "--out-dir",
        str(out_dir),
        *FAST_MODEL,
    )
    names = sorted(p.name for p in out_dir.iterdir())
    assert names == ["f_0000.json", "f_0003.json", "f_0006.json", "manifest.json"]
    manifest = json.loads((out_dir / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["holdout"] == HOLDOUT


def test_train_unknown_holdout(corpus_file, tmp_path):
    with pytest.raises(CommandError) as info:
        run(
            "train",
            "--corpus",
            str(corpus_file),
            "--holdout",
            "imagenet",
            "--out-dir",
            str(tmp_path / "bank"),
        )
    assert info.value.returncode == EXIT_USAGE


def test_missing_corpus_is_an_io_error(tmp_path):
    with pytest.raises(CommandError) as info:
        run(
            "simulate",
            "--corpus",
            str(tmp_path / "nope.jsonl"),
            "--holdout",
            HOLDOUT,
            "--out",
            str(tmp_path / "r.csv"),
        )
    assert info.value.returncode == EXIT_IO


# ---------- rank ----------
def test_rank_with_oracle_scorer(corpus_file, tmp_path):
    out = tmp_path / "rank.csv"
    output = run(
        "rank",
        "--corpus",
        str(corpus_file),
        "--holdout",
        HOLDOUT,
        "--scorer",
        "oracle",
        "--repetitions",
        "2",
        "--test-runs",
        "8",
        "--train-runs",
        "3",
        "--out",
        str(out),
    )
    header, rows = read_results_csv(out)
    assert header["command"] == "rank"
    assert header["scorer"] == "oracle"
    assert len(rows) == 22
    assert {r.spearman for r in rows} == {1.0}
    assert "1.000" in output


def test_rank_reports_each_ablation(corpus_file, tmp_path):
    out = tmp_path / "rank.csv"
    output = run(
        "rank",
        "--corpus",
        str(corpus_file),
        "--holdout",
        HOLDOUT,
        "--repetitions",
        "1",
        "--test-runs",
        "8",
        "--train-runs",
        "3",
        "--fractions",
        "0",
        "--fractions",
        "0.25",
        "--ablation",
        "full",
        "--ablation",
        "no_dataset",
        "--out",
        str(out),
        *FAST_MODEL,
    )
    _, rows = read_results_csv(out)
    assert [(r.policy, r.length_fraction) for r in rows] == [
        ("lcranknet", 0.0),
        ("lcranknet", 0.25),
        ("lcranknet/no_dataset", 0.0),
        ("lcranknet/no_dataset", 0.25),
    ]
    assert "lcranknet/no_dataset 0.25 (l=3)" in output


def test_rank_rejects_fractions_outside_the_unit_interval(corpus_file, tmp_path):
    with pytest.raises(CommandError, match="fractions") as info:
        run(
            "rank",
            "--corpus",
            str(corpus_file),
            "--holdout",
            HOLDOUT,
            "--fractions",
            "1.5",
            "--out",
            str(tmp_path / "r.csv"),
        )
    assert info.value.returncode == EXIT_USAGE


# ---------- simulate ----------
def test_simulate_none_has_zero_regret(corpus_file, tmp_path):
    out, trace = tmp_path / "sim.csv", tmp_path / "trace.csv"
    run(
        "simulate",
        "--corpus",
        str(corpus_file),
        "--holdout",
        HOLDOUT,
        "--policy",
        "none",
        "--seeds",
        "2",
        "--out",
        str(out),
        "--trace-out",
        str(trace),
    )
    _, rows = read_results_csv(out)
    assert [r.policy for r in rows] == ["none", "none"]
    assert all(r.regret == 0.0 and r.epochs == 144 for r in rows)
    assert trace.read_text(encoding="utf-8").startswith("# command=simulate")


def test_simulate_several_policies(corpus_file, tmp_path):
    out = tmp_path / "sim.csv"
    output = run(
        "simulate",
        "--corpus",
        str(corpus_file),
        "--holdout",
        HOLDOUT,
        "--policy",
        "none",
        "--policy",
        "last_value",
        "--policy",
        "sh",
        "--seeds",
        "1",
        "--out",
        str(out),
    )
    _, rows = read_results_csv(out)
    assert {r.policy for r in rows} == {"none", "last_value", "sh"}
    assert "last_value" in output


def test_simulate_rejects_bank_for_another_holdout(corpus_file, tmp_path):
    bank_dir = tmp_path / "bank"
    run(
        "train",
        "--corpus",
        str(corpus_file),
        "--holdout",
        "synth-00",
        "--lengths",
        "3",
        "--out-dir",
        str(bank_dir),
        *FAST_MODEL,
    )
    with pytest.raises(CommandError, match="held out") as info:
        run(
            "simulate",
            "--corpus",
            str(corpus_file),
            "--holdout",
            HOLDOUT,
            "--policy",
            "lcranknet",
            "--bank-dir",
            str(bank_dir),
            "--out",
            str(tmp_path / "r.csv"),
        )
    assert info.value.returncode == EXIT_USAGE


def test_simulate_zero_runs_is_a_usage_error(corpus_file, tmp_path):
    with pytest.raises(CommandError) as info:
        run(
            "simulate",
            "--corpus",
            str(corpus_file),
            "--holdout",
            HOLDOUT,
            "--policy",
            "none",
            "--runs",
            "0",
            "--out",
            str(tmp_path / "r.csv"),
        )
    assert info.value.returncode == EXIT_USAGE


# ---------- --config ----------
def test_config_file_fills_unset_flags(corpus_file, tmp_path):
    config = tmp_path / "simulate.env"
    config.write_text("POLICY=last_value\nseeds=3\nincumbent-view=final\n", encoding="utf-8")
    out = tmp_path / "sim.csv"
    args = ["--corpus", str(corpus_file), "--holdout", HOLDOUT, "--out", str(out)]

    run("simulate", "--config", str(config), *args)
    header, rows = read_results_csv(out)
    assert [r.policy for r in rows] == ["last_value"] * 3
    assert header["incumbent_view"] == "final"

    run("simulate", "--config", str(config), "--seeds", "1", "--policy", "none", *args)
    _, rows = read_results_csv(out)
    assert [r.policy for r in rows] == ["none"]


def test_config_file_with_unknown_key(corpus_file, tmp_path):
    config = tmp_path / "bad.env"
    config.write_text("colour=red\n", encoding="utf-8")
    with pytest.raises(CommandError, match="unknown keys") as info:
        run("gen_corpus", "--config", str(config), "--out", str(tmp_path / "c.jsonl"))
    assert info.value.returncode == EXIT_USAGE


# ---------- optimize ----------
def test_optimize_writes_result_and_trace(corpus_file, tmp_path):
    out, trace = tmp_path / "opt.csv", tmp_path / "incumbent.csv"
    output = run(
        "optimize",
        "--corpus",
        str(corpus_file),
        "--holdout",
        HOLDOUT,
        "--policy",
        "last_value",
        "--population",
        "4",
        "--tournament",
        "2",
        "--budget",
        "8",
        "--out",
        str(out),
        "--trace-out",
        str(trace),
    )
    _, rows = read_results_csv(out)
    assert len(rows) == 1
    assert rows[0].protocol == "optimize"
    assert 0.0 <= rows[0].regret <= 1.0
    assert len(data_rows(trace)) == 8
    assert "after 8 evaluations" in output


def test_optimize_rejects_schedule_policies(corpus_file, tmp_path):
    with pytest.raises(CommandError) as info:
        run(
            "optimize",
            "--corpus",
            str(corpus_file),
            "--holdout",
            HOLDOUT,
            "--policy",
            "hyperband",
            "--out",
            str(tmp_path / "o.csv"),
        )
    assert info.value.returncode == EXIT_USAGE


def _train_bank(corpus_file, out_dir, *extra):
    run(
        "train",
        "--corpus",
        str(corpus_file),
        "--holdout",
        HOLDOUT,
        "--out-dir",
        str(out_dir),
        *FAST_MODEL,
        *extra,
    )
    return out_dir


def _optimize_with_bank(corpus_file, bank_dir, out):
    return run(
        "optimize",
        "--corpus",
        str(corpus_file),
        "--holdout",
        HOLDOUT,
        "--policy",
        "lcranknet",
        "--population",
        "4",
        "--tournament",
        "2",
        "--budget",
        "6",
        "--bank-dir",
        str(bank_dir),
        "--out",
        str(out),
    )


def test_optimize_rejects_a_bank_without_the_final_head(corpus_file, tmp_path):
    bank_dir = _train_bank(corpus_file, tmp_path / "bank")
    with pytest.raises(CommandError, match="final-performance head") as info:
        _optimize_with_bank(corpus_file, bank_dir, tmp_path / "o.csv")
    assert info.value.returncode == EXIT_USAGE


def test_optimize_with_a_final_head_bank(corpus_file, tmp_path):
    bank_dir = _train_bank(corpus_file, tmp_path / "bank", "--final-head")
    manifest = json.loads((bank_dir / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["config"]["with_final_head"] is True
    output = _optimize_with_bank(corpus_file, bank_dir, tmp_path / "o.csv")
    header, rows = read_results_csv(tmp_path / "o.csv")
    assert header["final_head"] == "True"
    assert rows[0].policy.startswith("lcranknet")
    assert "after 6 evaluations" in output


# ---------- report ----------
def test_report_renders_charts_and_summary(corpus_file, tmp_path):
    rank_csv, sim_csv = tmp_path / "rank.csv", tmp_path / "sim.csv"
    common = ["--corpus", str(corpus_file), "--holdout", HOLDOUT]
    run(
        "rank",
        *common,
        "--scorer",
        "last_value",
        "--repetitions",
        "1",
        "--test-runs",
        "8",
        "--train-runs",
        "3",
        "--out",
        str(rank_csv),
    )
    run(
        "simulate",
        *common,
        "--policy",
        "none",
        "--policy",
        "sh",
        "--seeds",
        "2",
        "--out",
        str(sim_csv),
    )

    out_dir = tmp_path / "report"
    run("report", "--results", str(rank_csv), "--results", str(sim_csv), "--out-dir", str(out_dir))

    assert sorted(p.name for p in out_dir.iterdir()) == ["rank.svg", "simulate.svg", "summary.csv"]
    for name in ("rank.svg", "simulate.svg"):
        root = ElementTree.parse(out_dir / name).getroot()
        assert root.get("viewBox") == "0 0 800 500"
    summary = data_rows(out_dir / "summary.csv")
    assert {row["policy"] for row in summary} == {"none", "sh"}


# ---------- desk-scale ----------
@pytest.mark.slow
def test_desk_scale_replay(tmp_path):
    corpus, out = tmp_path / "corpus.jsonl", tmp_path / "sim.csv"
    run("gen_corpus", "--out", str(corpus))
    assert len(load_jsonl(corpus)) == 500
    run(
        "simulate",
        "--corpus",
        str(corpus),
        "--holdout",
        "synth-04",
        "--policy",
        "none",
        "--policy",
        "last_value",
        "--policy",
        "sh",
        "--seeds",
        "2",
        "--out",
        str(out),
    )
    _, rows = read_results_csv(out)
    epochs = {(r.policy, r.seed): r.epochs for r in rows}
    for seed in (42, 43):
        assert epochs[("none", seed)] == 100 * 100
        assert epochs[("last_value", seed)] <= epochs[("none", seed)]
        assert epochs[("sh", seed)] < epochs[("none", seed)]
    assert all(0.0 <= r.regret <= 1.0 for r in rows)
