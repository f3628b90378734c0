"""GRU encoders over the observational context plus intervention/query
embeddings, feeding a Gaussian (mean, log-std) head."""

from __future__ import annotations

import math

import numpy as np
import torch
import torch.nn as nn

from pfn_trainer.corpus import KINDS, PROFILES, Corpus, Record

TIME_ENC_DIM = 5


def time_encoding(t: int, seq_len: int) -> np.ndarray:
    x = t / seq_len
    return np.array([x, math.sin(2 * math.pi * x), math.cos(2 * math.pi * x),
                     math.sin(4 * math.pi * x), math.cos(4 * math.pi * x)], dtype=np.float32)


def intervention_features(rec: Record, n_max: int, seq_len: int,
                          targets: tuple[int, ...] | None = None) -> np.ndarray:
    """Target multi-hot, kind one-hot, start/end time encodings, applied-value
    summary, profile one-hot (with a none slot for hard/soft)."""
    targets = rec.targets if targets is None else targets
    hot = np.zeros(n_max, dtype=np.float32)
    for i in targets:
        hot[i] = 1.0
    kind = np.zeros(len(KINDS), dtype=np.float32)
    kind[rec.kind] = 1.0
    prof = np.zeros(len(PROFILES) + 1, dtype=np.float32)
    prof[rec.profile + 1] = 1.0  # slot 0 = no profile
    summary = np.array([np.arcsinh(rec.value_mean), np.arcsinh(rec.value_std)], dtype=np.float32)
    return np.concatenate([hot, kind,
                           time_encoding(rec.t_start, seq_len),
                           time_encoding(rec.t_end, seq_len),
                           summary, prof])


QUERY_CELL_DIM = 6


def query_features(rec: Record, n_max: int, seq_len: int,
                   targets: tuple[int, ...] | None = None) -> np.ndarray:
    """Query variable/time plus what the intervention does at that exact cell
    (clamp value, soft shift, coverage indicators)."""
    targets = rec.targets if targets is None else targets
    hot = np.zeros(n_max, dtype=np.float32)
    hot[rec.query_var] = 1.0
    clamp, shift = rec.applied_at(rec.query_var, rec.query_time, targets)
    in_targets = rec.query_var in targets
    in_window = rec.t_start <= rec.query_time <= rec.t_end
    covered = in_targets and in_window
    cell = np.array([
        np.arcsinh(clamp),
        np.arcsinh(shift),
        1.0 if covered and rec.kind != 1 else 0.0,  # cell is clamped
        1.0 if covered and rec.kind == 1 else 0.0,  # cell is shifted
        float(in_targets),
        float(in_window),
    ], dtype=np.float32)
    return np.concatenate([hot, time_encoding(rec.query_time, seq_len), cell])


def encode_corpus(corpus: Corpus, n_max: int, targets_override=None):
    """Tensors for the whole corpus: padded obs, presence mask, intervention
    and query features, targets.

    ``targets_override`` swaps per-record intervention targets (the shuffled
    control) without touching anything else.
    """
    n_rec = len(corpus)
    T = corpus.seq_len
    obs = np.zeros((n_rec, T, n_max), dtype=np.float32)
    mask = np.zeros((n_rec, n_max), dtype=np.float32)
    iv_dim = n_max + len(KINDS) + 2 * TIME_ENC_DIM + 2 + len(PROFILES) + 1
    iv = np.zeros((n_rec, iv_dim), dtype=np.float32)
    q = np.zeros((n_rec, n_max + TIME_ENC_DIM + QUERY_CELL_DIM), dtype=np.float32)
    y = np.zeros(n_rec, dtype=np.float32)
    for idx, rec in enumerate(corpus.records):
        if rec.n_vars > n_max:
            raise ValueError(f"record {idx} has {rec.n_vars} variables > n_max {n_max}")
        if rec.obs.shape[0] != T:
            raise ValueError(f"record {idx} has seq_len {rec.obs.shape[0]} != {T}")
        obs[idx, :, :rec.n_vars] = rec.obs
        mask[idx, :rec.n_vars] = 1.0
        tgt = None if targets_override is None else targets_override[idx]
        iv[idx] = intervention_features(rec, n_max, T, targets=tgt)
        q[idx] = query_features(rec, n_max, T, targets=tgt)
        y[idx] = rec.target
    return (torch.from_numpy(obs), torch.from_numpy(mask), torch.from_numpy(iv),
            torch.from_numpy(q), torch.from_numpy(y))


class CausalQueryNet(nn.Module):
    """Temporal GRU encoder + intervention/query embeddings -> (mean, log_std).

    The Gaussian stays in raw target space; the mean is parameterized through
    sinh so that O(1) network outputs cover the heavy-tailed target range
    (the inverse of the asinh squashing applied to the inputs).
    """

    MEAN_CLAMP = 12.0  # sinh(12) ~ 8e4, comfortably past the clip bound

    def __init__(self, n_max: int = 10, hidden_dim: int = 128, encoder_layers: int = 2):
        super().__init__()
        self.n_max = n_max
        iv_dim = n_max + len(KINDS) + 2 * TIME_ENC_DIM + 2 + len(PROFILES) + 1
        q_dim = n_max + TIME_ENC_DIM + QUERY_CELL_DIM
        self.temporal = nn.GRU(input_size=2 * n_max, hidden_size=hidden_dim,
                               num_layers=encoder_layers, batch_first=True)
        self.intervention = nn.Sequential(nn.Linear(iv_dim, 64), nn.ReLU(), nn.Linear(64, 64))
        self.query = nn.Sequential(nn.Linear(q_dim, 64), nn.ReLU(), nn.Linear(64, 64))
        self.head = nn.Sequential(
            nn.Linear(hidden_dim + 128, hidden_dim), nn.ReLU(),
            nn.Linear(hidden_dim, 2),
        )
        # start with a wide predictive distribution; targets are heavy tailed
        with torch.no_grad():
            self.head[-1].bias[1] = 3.0

    def forward(self, obs, mask, iv, q):
        # squash heavy-tailed values; mask channels tell padding from zeros
        squashed = torch.asinh(obs) * mask[:, None, :]
        seq = torch.cat([squashed, mask[:, None, :].expand_as(obs)], dim=-1)
        _, hidden = self.temporal(seq)
        parts = torch.cat([hidden[-1], self.intervention(iv), self.query(q)], dim=-1)
        out = self.head(parts)
        mean = torch.sinh(out[:, 0].clamp(-self.MEAN_CLAMP, self.MEAN_CLAMP))
        log_std = out[:, 1].clamp(-5.0, 10.0)
        return mean, log_std


def gaussian_nll(mean, log_std, target):
    var = torch.exp(2.0 * log_std)
    return 0.5 * (math.log(2.0 * math.pi) + 2.0 * log_std + (target - mean) ** 2 / var)
