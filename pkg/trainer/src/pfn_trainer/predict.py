"""Prediction: emit `index,mean,std` files the generator's scorer consumes."""

from __future__ import annotations

import numpy as np
import torch

from pfn_trainer.corpus import Corpus, load_corpus
from pfn_trainer.model import encode_corpus
from pfn_trainer.train import load_checkpoint


def _forward_corpus(model, cfg, corpus: Corpus, targets_override=None, batch_size=256):
    obs, mask, iv, q, _ = encode_corpus(corpus, cfg.n_max, targets_override)
    means, stds = [], []
    with torch.no_grad():
        for lo in range(0, len(corpus), batch_size):
            hi = lo + batch_size
            mean, log_std = model(obs[lo:hi], mask[lo:hi], iv[lo:hi], q[lo:hi])
            means.append(mean.numpy())
            stds.append(torch.exp(log_std).numpy())
    return np.concatenate(means), np.concatenate(stds)


def write_predictions(path, means, stds) -> None:
    with open(path, "w") as fh:
        for i, (m, s) in enumerate(zip(means, stds)):
            fh.write(f"{i},{float(m)!r},{float(s)!r}\n")


def predict(checkpoint_path, corpus_path, out_path) -> tuple[np.ndarray, np.ndarray]:
    """Predict every record of a corpus; one output line per record."""
    model, cfg, _ = load_checkpoint(checkpoint_path)
    corpus = load_corpus(corpus_path)
    means, stds = _forward_corpus(model, cfg, corpus)
    write_predictions(out_path, means, stds)
    return means, stds


def shuffle_targets(corpus: Corpus, rng: np.random.Generator, identity: bool = False):
    """Per record, reassign every intervention target to a random other
    variable.  ``identity`` keeps the original targets (the null-shuffle test
    hook); records without an alternative variable keep theirs too."""
    out = []
    for rec in corpus.records:
        if identity or rec.n_vars <= len(rec.targets):
            out.append(rec.targets)
            continue
        new_targets: list[int] = []
        for t in rec.targets:
            candidates = [v for v in range(rec.n_vars) if v != t and v not in new_targets]
            new_targets.append(int(candidates[int(rng.integers(0, len(candidates)))]))
        out.append(tuple(sorted(new_targets)))
    return out


def shuffle_predict(checkpoint_path, corpus_path, out_path, seed: int,
                    identity: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Predict with intervention targets randomly reassigned before encoding."""
    model, cfg, _ = load_checkpoint(checkpoint_path)
    corpus = load_corpus(corpus_path)
    targets = shuffle_targets(corpus, np.random.default_rng(seed), identity=identity)
    means, stds = _forward_corpus(model, cfg, corpus, targets_override=targets)
    write_predictions(out_path, means, stds)
    return means, stds
