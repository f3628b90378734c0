"""Training loop: minimize the Gaussian NLL of interventional outcomes."""

from __future__ import annotations

import time
from dataclasses import asdict

import torch

from pfn_trainer.config import TrainerConfig
from pfn_trainer.corpus import load_corpus
from pfn_trainer.model import CausalQueryNet, encode_corpus, gaussian_nll


def train(cfg: TrainerConfig, corpus_path, checkpoint_path, log=print) -> dict:
    """Train on a corpus and write a self-describing checkpoint.

    Returns the checkpoint dict (also saved to ``checkpoint_path``).  Its
    ``epoch_losses`` entry carries the full-training-set NLL evaluated with
    frozen weights after each epoch (comparable across epochs, unlike the
    running minibatch mean, which also moves with batch composition);
    ``running_losses`` keeps the in-epoch means.
    """
    corpus = load_corpus(corpus_path)
    if corpus.seq_len != cfg.seq_len:
        raise ValueError(f"corpus seq_len {corpus.seq_len} != config seq_len {cfg.seq_len}")
    max_vars = max(rec.n_vars for rec in corpus.records)
    if max_vars > cfg.n_max:
        raise ValueError(f"corpus has {max_vars}-variable records > n_max {cfg.n_max}")

    torch.manual_seed(cfg.seed)
    obs, mask, iv, q, y = encode_corpus(corpus, cfg.n_max)
    model = CausalQueryNet(n_max=cfg.n_max, hidden_dim=cfg.hidden_dim,
                           encoder_layers=cfg.encoder_layers)
    optimizer = torch.optim.Adam(model.parameters(), lr=cfg.learning_rate)
    scheduler = None
    if cfg.cosine_decay:
        scheduler = torch.optim.lr_scheduler.CosineAnnealingLR(optimizer, T_max=cfg.epochs)

    n = len(corpus)
    generator = torch.Generator().manual_seed(cfg.seed)
    epoch_losses = []
    running_losses = []
    started = time.perf_counter()

    def full_set_nll() -> float:
        model.eval()
        total = 0.0
        with torch.no_grad():
            for lo in range(0, n, 512):
                hi = lo + 512
                mean, log_std = model(obs[lo:hi], mask[lo:hi], iv[lo:hi], q[lo:hi])
                total += float(gaussian_nll(mean, log_std, y[lo:hi]).sum())
        return total / n

    for epoch in range(cfg.epochs):
        model.train()
        order = torch.randperm(n, generator=generator)
        total = 0.0
        for lo in range(0, n, cfg.batch_size):
            idx = order[lo:lo + cfg.batch_size]
            optimizer.zero_grad()
            mean, log_std = model(obs[idx], mask[idx], iv[idx], q[idx])
            loss = gaussian_nll(mean, log_std, y[idx]).mean()
            loss.backward()
            optimizer.step()
            total += float(loss.detach()) * len(idx)
        if scheduler is not None:
            scheduler.step()
        running_losses.append(total / n)
        epoch_losses.append(full_set_nll())
        log(f"epoch {epoch + 1:2d}/{cfg.epochs}  nll {epoch_losses[-1]:.4f}  "
            f"(running {running_losses[-1]:.4f})  "
            f"elapsed {time.perf_counter() - started:.0f}s")

    checkpoint = {
        "config": asdict(cfg),
        "config_digest": cfg.digest(),
        "state_dict": model.state_dict(),
        "epoch_losses": epoch_losses,
        "running_losses": running_losses,
        "n_train_records": n,
    }
    torch.save(checkpoint, checkpoint_path)
    return checkpoint


def load_checkpoint(path) -> tuple[CausalQueryNet, TrainerConfig, dict]:
    try:
        checkpoint = torch.load(path, map_location="cpu", weights_only=False)
    except FileNotFoundError:
        raise FileNotFoundError(f"checkpoint not found: {path}")
    cfg = TrainerConfig(**checkpoint["config"])
    if checkpoint.get("config_digest") != cfg.digest():
        raise ValueError(f"checkpoint {path} has a corrupted config block")
    model = CausalQueryNet(n_max=cfg.n_max, hidden_dim=cfg.hidden_dim,
                           encoder_layers=cfg.encoder_layers)
    model.load_state_dict(checkpoint["state_dict"])
    model.eval()
    return model, cfg, checkpoint
