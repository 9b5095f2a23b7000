"""Command-line pipeline: synth -> featurize -> distmat -> experiment."""

import json

import numpy as np
import pytest
from click.testing import CliRunner

from specbir.cli import EXIT_CONFIG, EXIT_DATA, main
from specbir.dissim import load_matrix_csv


@pytest.fixture(scope="module")
def pipeline_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("pipeline")
    runner = CliRunner()
    result = runner.invoke(main, [
        "synth", "--out", str(root / "corpus"), "--categories", "3",
        "--patches-per-category", "8,8,8", "--side", "8", "--bands", "6",
        "--noise-sigma", "0.08", "--seed", "5",
    ])
    assert result.exit_code == 0, result.output
    return root


def test_synth_writes_corpus(pipeline_dir):
    corpus = pipeline_dir / "corpus"
    assert (corpus / "labels.csv").exists()
    assert len(list((corpus / "patches").glob("*.raw"))) == 24


def test_featurize_and_resume(pipeline_dir):
    runner = CliRunner()
    corpus = str(pipeline_dir / "corpus")
    first = runner.invoke(main, [
        "featurize", "--corpus", corpus, "--m", "3", "--runs", "4", "--seed", "1",
    ])
    assert first.exit_code == 0, first.output
    assert "featurized 24 patches (0 cached)" in first.output

    cache = pipeline_dir / "corpus" / "features"
    records = sorted(cache.glob("*.npz"))
    assert len(records) == 24
    stamps = {p.name: p.stat().st_mtime_ns for p in records}

    # Drop one record; the rerun recomputes only that one.
    records[3].unlink()
    second = runner.invoke(main, [
        "featurize", "--corpus", corpus, "--m", "3", "--runs", "4", "--seed", "1",
    ])
    assert second.exit_code == 0, second.output
    assert "featurized 1 patches (23 cached)" in second.output
    for path in sorted(cache.glob("*.npz")):
        if path.name != records[3].name:
            assert path.stat().st_mtime_ns == stamps[path.name]


def test_distmat_symmetric_zero_diagonal(pipeline_dir):
    runner = CliRunner()
    corpus = str(pipeline_dir / "corpus")
    result = runner.invoke(main, [
        "distmat", "--corpus", corpus, "--kinds", "ndd-avg,ndd-byband",
        "--m", "3", "--seed", "1",
    ])
    assert result.exit_code == 0, result.output
    for kind in ("ndd-avg", "ndd-byband"):
        ids, M = load_matrix_csv(pipeline_dir / "corpus" / f"distmat_{kind}.csv")
        assert ids == list(range(1, 25))
        np.testing.assert_array_equal(M, M.T)
        np.testing.assert_array_equal(np.diag(M), np.zeros(24))


def test_experiment_deterministic_reports(pipeline_dir, tmp_path):
    runner = CliRunner()
    corpus = str(pipeline_dir / "corpus")
    args = [
        "experiment", "--corpus", corpus, "--kinds", "ndd-avg",
        "--classifiers", "knn", "--policies", "online", "--criteria", "AL",
        "--scope", "4", "--t-max", "3",
    ]
    out_a = tmp_path / "a.csv"
    json_a = tmp_path / "a.json"
    result = runner.invoke(main, args + ["--out-csv", str(out_a),
                                         "--out-json", str(json_a)])
    assert result.exit_code == 0, result.output
    out_b = tmp_path / "b.csv"
    json_b = tmp_path / "b.json"
    result = runner.invoke(main, args + ["--out-csv", str(out_b),
                                         "--out-json", str(json_b)])
    assert result.exit_code == 0, result.output
    assert out_a.read_bytes() == out_b.read_bytes()
    assert json_a.read_bytes() == json_b.read_bytes()
    payload = json.loads(json_a.read_text())
    assert payload[0]["config"]["kind"] == "ndd-avg"


def test_config_file_with_flag_override(pipeline_dir, tmp_path):
    config = tmp_path / "run.conf"
    config.write_text(
        "# experiment configuration\n"
        f"corpus_dir: {pipeline_dir / 'corpus'}\n"
        "kinds: ndd-avg\n"
        "t_max: 2\n"
        "scope: 4\n"
    )
    runner = CliRunner()
    result = runner.invoke(main, [
        "experiment", "--config", str(config), "--criteria", "BW",
    ])
    assert result.exit_code == 0, result.output
    assert "ndd-avg knn online BW" in result.output


def test_exit_codes():
    runner = CliRunner()
    missing_config = runner.invoke(main, ["experiment", "--config", "/no/file"])
    assert missing_config.exit_code == EXIT_CONFIG
    missing_corpus = runner.invoke(main, ["featurize", "--corpus", "/no/corpus"])
    assert missing_corpus.exit_code == EXIT_DATA
    bad_kind = runner.invoke(main, [
        "distmat", "--corpus", "/no/corpus", "--kinds", "bogus",
    ])
    assert bad_kind.exit_code == EXIT_CONFIG
