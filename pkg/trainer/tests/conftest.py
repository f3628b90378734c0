"""Fixtures: small corpora generated through the primary CLI."""

import subprocess
import sys

import pytest


def generate_corpus(path, n, seed, extra=()):
    subprocess.run(
        [sys.executable, "-m", "ctpr.cli", "generate", "--n", str(n), "--seed", str(seed),
         "--workers", "2", "--out", str(path), *extra],
        check=True, capture_output=True,
    )


def export_jsonl(corpus_path, jsonl_path):
    subprocess.run(
        [sys.executable, "-m", "ctpr.cli", "export", "--in", str(corpus_path),
         "--out", str(jsonl_path)],
        check=True, capture_output=True,
    )


def score_predictions(corpus_path, predictions_path):
    """Round-trip through the primary scorer; returns the parsed JSON report."""
    import json

    proc = subprocess.run(
        [sys.executable, "-m", "ctpr.cli", "evaluate", "--in", str(corpus_path),
         "--method", "predictions-file", "--predictions", str(predictions_path), "--json"],
        capture_output=True, text=True,
    )
    if proc.returncode != 0:
        raise AssertionError(f"primary scorer rejected the file: {proc.stderr}")
    return json.loads(proc.stdout)


@pytest.fixture(scope="session")
def tiny_corpus(tmp_path_factory):
    path = tmp_path_factory.mktemp("corpus") / "tiny.ctpr"
    generate_corpus(path, 120, seed=5)
    return path


@pytest.fixture(scope="session")
def tiny_jsonl(tmp_path_factory, tiny_corpus):
    path = tmp_path_factory.mktemp("corpus") / "tiny.jsonl"
    export_jsonl(tiny_corpus, path)
    return path


@pytest.fixture(scope="session")
def tiny_checkpoint(tmp_path_factory, tiny_corpus):
    from pfn_trainer.config import TrainerConfig
    from pfn_trainer.train import train

    path = tmp_path_factory.mktemp("ckpt") / "tiny.pt"
    train(TrainerConfig(epochs=2), tiny_corpus, path, log=lambda *_: None)
    return path
