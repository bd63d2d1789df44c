#!/usr/bin/env python3
"""
Tests for the fsgraph command line
"""

import json
import logging

import pytest

from fsgraph.cli import main
from fsgraph.log import ENV_VAR, setup_logging

TINY_ENCODER = {
    "word_dim": 8,
    "hidden_size": 6,
    "num_layers": 1,
    "max_span_length": 4,
    "width_embedding_dim": 3,
    "dropout_lstm": 0.0,
    "dropout_mlp": 0.0,
    "mlp_hidden": 10,
}


@pytest.fixture
def workdir(tmp_path):
    """A generated fixture corpus whose config trains a tiny model for one epoch."""
    assert main(["-q", "generate", "--seed", "5", "--n-sentences", "20", "--out-dir", str(tmp_path)]) == 0
    config_path = tmp_path / "config.json"
    config = json.loads(config_path.read_text())
    config["encoder"].update(TINY_ENCODER)
    config["train"].update({"max_epochs": 1, "batch_size": 4})
    config_path.write_text(json.dumps(config))
    return tmp_path


def test_generate_is_deterministic(tmp_path):
    """The same seed writes byte-identical data files"""
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert main(["generate", "--seed", "3", "--n-sentences", "30", "--out-dir", str(out)]) == 0
    for name in ("ontology.json", "train.jsonl", "dev.jsonl", "test.jsonl", "config.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes(), name
    assert len((a / "train.jsonl").read_text().splitlines()) == 24


def test_gold_against_gold_scores_one(workdir, capsys):
    """Evaluating a file against itself reports 1.0 everywhere"""
    gold = str(workdir / "test.jsonl")
    assert main(["evaluate", "--pred", gold, "--gold", gold]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["target"]["f1"] == report["frame"]["f1"] == report["role"]["f1"] == 1.0
    assert "sentences" not in report


def test_evaluate_text_and_per_sentence(workdir, capsys):
    """Text output renders the report; per-sentence JSON lists each sentence"""
    gold = str(workdir / "dev.jsonl")
    assert main(["evaluate", "--pred", gold, "--gold", gold, "--format", "text"]) == 0
    assert "target F1 by predicate kind" in capsys.readouterr().out
    out = workdir / "report.json"
    assert main(["evaluate", "--pred", gold, "--gold", gold, "--per-sentence", "--output", str(out)]) == 0
    assert len(json.loads(out.read_text())["sentences"]) == 2


def test_train_parse_evaluate(workdir, capsys):
    """A trained checkpoint parses a corpus that evaluate can score"""
    assert main(["-q", "train", "--config", str(workdir / "config.json"), "--variant", "joint"]) == 0
    model_dir = workdir / "model"
    assert (model_dir / "meta.json").exists() and (model_dir / "metrics.jsonl").exists()
    pred = workdir / "pred.jsonl"
    assert main(["-q", "parse", "--checkpoint", str(model_dir), "--input", str(workdir / "test.jsonl"), "--output", str(pred)]) == 0
    assert main(["evaluate", "--pred", str(pred), "--gold", str(workdir / "test.jsonl")]) == 0
    capsys.readouterr()
    assert main(["-q", "benchmark", "--checkpoint", str(model_dir), "--corpus", str(workdir / "test.jsonl"), "--runs", "1"]) == 0
    result = json.loads(capsys.readouterr().out)
    assert result["Joint"]["sentences_per_second"] > 0


def test_evaluate_checkpoint_reports_module_metrics(workdir, capsys):
    """Evaluating a checkpoint parses the gold file itself and adds node, frame and edge scores"""
    assert main(["-q", "train", "--config", str(workdir / "config.json"), "--variant", "joint"]) == 0
    capsys.readouterr()
    gold = str(workdir / "test.jsonl")
    assert main(["-q", "evaluate", "--checkpoint", str(workdir / "model"), "--gold", gold]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["node"]["gold_count"] > 0
    assert report["edge"]["gold_count"] > 0
    assert 0.0 <= report["role"]["f1"] <= 1.0


def test_train_node_edge_writes_system(workdir):
    """The staged variant writes one directory per stage and a system file"""
    out = workdir / "staged"
    assert main(["-q", "train", "--config", str(workdir / "config.json"), "--variant", "node+edge", "--output-dir", str(out)]) == 0
    assert json.loads((out / "system.json").read_text()) == {"system": "Node+Edge"}
    assert (out / "node" / "model.pt").exists() and (out / "edge" / "model.pt").exists()


def test_errors_exit_nonzero_with_one_line(tmp_path, capsys):
    """Library errors exit 1 with a single diagnostic line"""
    assert main(["evaluate", "--pred", str(tmp_path / "nope.jsonl"), "--gold", str(tmp_path / "nope.jsonl")]) == 1
    err = capsys.readouterr().err
    assert err.startswith("fsgraph: error:") and err.count("\n") == 1

    bad = tmp_path / "config.json"
    bad.write_text("{not json")
    assert main(["train", "--config", str(bad)]) == 1
    assert "malformed JSON" in capsys.readouterr().err

    bad.write_text(json.dumps({"train": {"epochs": 3}}))
    assert main(["train", "--config", str(bad)]) == 1
    assert "unknown key" in capsys.readouterr().err


def test_mismatched_corpora(workdir, capsys):
    """Prediction and gold files that do not align are rejected"""
    rc = main(["evaluate", "--pred", str(workdir / "dev.jsonl"), "--gold", str(workdir / "test.jsonl")])
    assert rc == 1
    assert "sentence 0" in capsys.readouterr().err


def test_usage_errors_exit_two(capsys):
    """Unknown commands and variants are usage errors"""
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == 2
    with pytest.raises(SystemExit) as info:
        main(["train", "--config", "x.json", "--variant", "everything"])
    assert info.value.code == 2
    # evaluate needs exactly one prediction source
    with pytest.raises(SystemExit) as info:
        main(["evaluate", "--gold", "gold.jsonl"])
    assert info.value.code == 2
    with pytest.raises(SystemExit) as info:
        main(["evaluate", "--gold", "gold.jsonl", "--pred", "p.jsonl", "--checkpoint", "model"])
    assert info.value.code == 2


def test_log_level_from_environment(monkeypatch):
    """FSGRAPH_LOG sets the level and -v lowers it"""
    monkeypatch.setenv(ENV_VAR, "info")
    assert setup_logging() == logging.INFO
    assert setup_logging(verbosity=1) == logging.DEBUG
    monkeypatch.delenv(ENV_VAR)
    assert setup_logging() == logging.WARNING


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
