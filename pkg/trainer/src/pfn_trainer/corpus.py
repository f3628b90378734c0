"""Corpus loading: JSONL export (default) and the native binary format.

Only the fields the model consumes are materialized: the observational
series, the intervention specification summary, and the query tuple.  The
binary reader walks the documented `.ctpr` record layout and skips the
graph/mechanism/noise blocks.
"""

from __future__ import annotations

import json
import os
import struct
from dataclasses import dataclass

import numpy as np

MAGIC = b"CTPR"
KINDS = ("hard", "soft", "time_varying")
PROFILES = ("step", "ramp", "sinusoidal", "sampled")

_HEADER = struct.Struct("<4sHHQQ32s")
_REC_HEADER = struct.Struct("<HHHBBBB")


@dataclass
class Record:
    obs: np.ndarray  # (T, N) float32
    n_vars: int
    kind: int  # index into KINDS
    targets: tuple[int, ...]
    t_start: int
    t_end: int
    value_mean: float  # applied value/shift summary
    value_std: float
    profile: int  # index into PROFILES, -1 for hard/soft
    applied: tuple[float, ...]  # hard: (c,); soft: shift per target; tv: trajectory
    query_var: int
    query_time: int
    target: float
    seed: int

    def applied_at(self, var: int, t: int, targets=None) -> tuple[float, float]:
        """(clamped value or 0, shift or 0) the intervention applies at a cell."""
        targets = self.targets if targets is None else targets
        if var not in targets or not self.t_start <= t <= self.t_end:
            return 0.0, 0.0
        if self.kind == 0:
            return self.applied[0], 0.0
        if self.kind == 1:
            return 0.0, self.applied[targets.index(var)]
        return self.applied[t - self.t_start], 0.0


@dataclass
class Corpus:
    records: list[Record]
    seq_len: int

    def __len__(self):
        return len(self.records)


def _summary(values) -> tuple[float, float]:
    arr = np.asarray(values, dtype=np.float64)
    return float(arr.mean()), float(arr.std())


def _record_from_json(obj: dict) -> Record:
    iv = obj["intervention"]
    kind = KINDS.index(iv["kind"])
    profile = -1
    if "value" in iv:
        applied = (float(iv["value"]),)
        vmean, vstd = iv["value"], 0.0
    elif "shift" in iv:
        applied = tuple(float(x) for x in iv["shift"])
        vmean, vstd = _summary(applied)
    else:
        applied = tuple(float(x) for x in iv["profile"]["trajectory"])
        vmean, vstd = _summary(applied)
        profile = PROFILES.index(iv["profile"]["kind"])
    return Record(
        obs=np.asarray(obj["obs"], dtype=np.float32),
        n_vars=obj["n_vars"],
        kind=kind,
        targets=tuple(iv["targets"]),
        t_start=iv["times"][0],
        t_end=iv["times"][-1],
        value_mean=float(vmean),
        value_std=float(vstd),
        profile=profile,
        applied=applied,
        query_var=obj["query"]["var"],
        query_time=obj["query"]["time"],
        target=float(obj["query"]["target"]),
        seed=obj["seed"],
    )


class _Cursor:
    __slots__ = ("buf", "pos")

    def __init__(self, buf):
        self.buf = buf
        self.pos = 0

    def take(self, n):
        chunk = self.buf[self.pos:self.pos + n]
        if len(chunk) != n:
            raise ValueError("truncated record")
        self.pos += n
        return chunk

    def unpack(self, st):
        return st.unpack(self.take(st.size))


def _record_from_bytes(buf: bytes) -> Record:
    cur = _Cursor(buf)
    n, k, T, _family, kind, n_regimes, _pad = cur.unpack(_REC_HEADER)
    bitset = (n * n + 7) // 8
    for _ in range(n_regimes):
        cur.take(4)  # edge prob
        cur.take((k + 1) * bitset)
        cur.take(n)  # topo order
        for _ in range(n):
            (n_par,) = cur.unpack(struct.Struct("<H"))
            cur.take(7 * n_par + 4)  # parents + bias
    cur.take(5 * n)  # noise specs
    if n_regimes > 1:
        cur.take(8 * n_regimes * n_regimes + T)
    obs = np.frombuffer(cur.take(4 * T * n), dtype="<f4").reshape(T, n).copy()
    cur.take(4 * T * n)  # interventional series: target already in the query
    (n_targets,) = cur.unpack(struct.Struct("<B"))
    targets = tuple(cur.take(n_targets))
    (n_times,) = cur.unpack(struct.Struct("<H"))
    times = np.frombuffer(cur.take(2 * n_times), dtype="<u2")
    profile = -1
    if kind == 0:
        (value,) = cur.unpack(struct.Struct("<d"))
        applied = (float(value),)
        vmean, vstd = value, 0.0
    elif kind == 1:
        applied = tuple(float(x) for x in np.frombuffer(cur.take(8 * n_targets), dtype="<f8"))
        vmean, vstd = _summary(applied)
    else:
        profile, n_params = cur.unpack(struct.Struct("<BB"))
        cur.take(8 * n_params)
        applied = tuple(float(x) for x in np.frombuffer(cur.take(8 * n_times), dtype="<f8"))
        vmean, vstd = _summary(applied)
    qvar, qtime, qtarget = cur.unpack(struct.Struct("<HHf"))
    (seed,) = cur.unpack(struct.Struct("<Q"))
    return Record(
        obs=obs, n_vars=n, kind=kind, targets=targets,
        t_start=int(times[0]), t_end=int(times[-1]),
        value_mean=float(vmean), value_std=float(vstd), profile=profile, applied=applied,
        query_var=qvar, query_time=qtime, target=float(np.float32(qtarget)), seed=seed,
    )


def _load_binary(path) -> Corpus:
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        magic, version, seq_len, count, _base_seed, _digest = _HEADER.unpack(head)
        if magic != MAGIC or version != 1:
            raise ValueError(f"{path}: not a version-1 corpus file")
        offsets = np.frombuffer(fh.read(8 * (count + 1)), dtype="<u8")
        records = []
        for i in range(count):
            records.append(_record_from_bytes(fh.read(int(offsets[i + 1] - offsets[i]))))
    return Corpus(records=records, seq_len=seq_len)


def _load_jsonl(path) -> Corpus:
    records = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(_record_from_json(json.loads(line)))
    if not records:
        raise ValueError(f"{path}: empty corpus")
    seq_len = records[0].obs.shape[0]
    return Corpus(records=records, seq_len=seq_len)


def load_corpus(path) -> Corpus:
    """Load a corpus from a JSONL export or a native binary file (sniffed)."""
    path = os.fspath(path)
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head == MAGIC:
        return _load_binary(path)
    return _load_jsonl(path)
