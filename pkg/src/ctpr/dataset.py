"""End-to-end sample pipeline and the `.ctpr` binary corpus format.

Pipeline per sample: sample TSCM -> sample intervention -> draw shared noise
-> simulate obs/int pair -> pick a training query.  Everything is a pure
function of (config, sample seed), and per-sample seeds are derived from the
corpus base seed with a SplitMix64 finalizer, so generation parallelizes
over sample indices with bit-identical output for any worker count.

On-disk layout (all little-endian)::

    header   magic "CTPR" | version u16 | seq_len u16 | count u64
             | base_seed u64 | config sha256 (32 bytes)
    table    (count+1) x u64 record offsets relative to the records base;
             the last entry is the total records byte length
    records  variable-length, see encode_record

Record layout::

    u16 N | u16 K | u16 T | u8 family | u8 kind | u8 n_regimes | u8 pad
    per regime:
        f32 edge_prob (NaN when not applicable)
        (K+1) adjacency bitsets, ceil(N*N/8) bytes each, bit j*N+i set for
            an edge from parent j (at the matrix's lag) into child i
        topo order, N x u8
        per variable: u16 n_parents | n_parents x (u8 var, u8 lag, u8 act,
            f32 weight) | f32 bias
    per variable: u8 noise family | f32 scale
    if n_regimes > 1: R*R x f64 transition | T x u8 regime path
    series: obs then int, each T*N x f32 row-major
    intervention: u8 n_targets | targets u8 | u16 n_times | times u16
        hard: f64 value / soft: n_targets x f64 / time_varying:
        u8 profile | u8 n_params | params f64 | n_times x f64 trajectory
    query: u16 var | u16 time | f32 target
    u64 sample_seed

Series, mechanism weights/biases, noise scales and edge probabilities are
narrowed to 32-bit floats at write time; intervention values and the regime
transition matrix stay 64-bit so exported specs round-trip exactly.
"""

from __future__ import annotations

import json
import os
import struct
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import BinaryIO, Iterable, Iterator, Optional

import numpy as np

from ctpr.analysis import QUERY_CLASSES, reachability_table
from ctpr.errors import FormatError, InputError
from ctpr.prior import PriorConfig, sample_intervention, sample_tscm
from ctpr.scm_core import (
    ACTIVATIONS,
    FAMILIES,
    INTERVENTION_KINDS,
    NOISE_FAMILIES,
    PROFILE_KINDS,
    AnyTscm,
    InterventionSpec,
    LaggedDag,
    Mechanism,
    NoiseSpec,
    Profile,
    QueryTuple,
    RegimeSwitchingTscm,
    Series,
    Tscm,
)
from ctpr.simulate import (
    draw_noise,
    simulate_interventional,
    simulate_observational,
    simulate_regime_chain,
)

MAGIC = b"CTPR"
VERSION = 1
_HEADER = struct.Struct("<4sHHQQ32s")
_REC_HEADER = struct.Struct("<HHHBBBB")

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


# -- deterministic seed derivation -------------------------------------------


def derive_sample_seed(base_seed: int, index: int) -> int:
    """SplitMix64 finalizer of base_seed XOR (index * golden ratio), mod 2^64."""
    z = (base_seed ^ ((index * _GOLDEN) & _MASK64)) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def derive_sample_seeds(base_seed: int, start: int, count: int) -> np.ndarray:
    """Vectorized :func:`derive_sample_seed` for indices start..start+count-1."""
    idx = np.arange(start, start + count, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(base_seed) ^ (idx * np.uint64(_GOLDEN))
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return z ^ (z >> np.uint64(31))


# -- one sample ---------------------------------------------------------------


@dataclass(frozen=True)
class PairedSample:
    """One training example: the sampled world, the do(), both series, and
    the query tuple.  ``sample_seed`` alone (plus the config) regenerates it.
    """

    tscm: AnyTscm
    intervention: InterventionSpec
    obs: Series
    int: Series
    query: QueryTuple
    sample_seed: int


def _shift_spec(spec: InterventionSpec, offset: int) -> InterventionSpec:
    if offset == 0:
        return spec
    return InterventionSpec(
        targets=spec.targets,
        times=tuple(t + offset for t in spec.times),
        kind=spec.kind,
        value=spec.value,
        shift=spec.shift,
        profile=spec.profile,
    )


def regenerate_world(cfg: PriorConfig, sample_seed: int):
    """Replay the sampling prefix of :func:`generate_sample`.

    Returns (tscm, spec, regime_path, obs_noise, int_noise) at full internal
    length (seq_len + burn_in); used for regeneration checks and predictors
    that re-simulate under modified specs.
    """
    rng = np.random.default_rng(sample_seed)
    tscm = sample_tscm(cfg, rng)
    spec = sample_intervention(tscm, cfg, rng)
    length = cfg.seq_len + cfg.burn_in
    regime_path = None
    if isinstance(tscm, RegimeSwitchingTscm):
        regime_path = simulate_regime_chain(tscm.transition, length, rng)
    obs_noise = draw_noise(tscm, length, rng)
    int_noise = draw_noise(tscm, length, rng) if cfg.resample_noise else obs_noise
    return tscm, spec, regime_path, obs_noise, int_noise


def simulate_pair(cfg: PriorConfig, tscm, spec, regime_path, obs_noise, int_noise):
    """Simulate the coupled obs/int pair and drop any burn-in prefix."""
    burn = cfg.burn_in
    length = cfg.seq_len + burn
    obs = simulate_observational(tscm, length, obs_noise, regime_path, cfg.clip_bound)
    intr = simulate_interventional(
        tscm, length, _shift_spec(spec, burn), int_noise, regime_path, cfg.clip_bound
    )
    if burn:
        kept_path = regime_path[burn:] if regime_path is not None else None
        obs = Series(values=obs.values[burn:], regime_path=kept_path)
        intr = Series(values=intr.values[burn:], regime_path=kept_path)
    return obs, intr


def _sample_query(spec, reach, T, n_vars, int_values, rng) -> QueryTuple:
    # equal thirds over the three query classes, falling back in cyclic
    # order when a class has no candidate cell in the query window
    t0 = spec.times[0]
    window = range(t0, min(t0 + 10, T - 1) + 1)
    targets = set(spec.targets)
    pools = {
        "intervened": [(i, t) for i in sorted(targets) for t in window],
        "downstream": [(i, t) for i in range(n_vars) if i not in targets
                       for t in window if reach[t, i]],
        "non_causal": [(i, t) for i in range(n_vars) if i not in targets
                       for t in window if not reach[t, i]],
    }
    first = int(rng.integers(0, 3))
    for step in range(3):
        pool = pools[QUERY_CLASSES[(first + step) % 3]]
        if pool:
            var, t = pool[int(rng.integers(0, len(pool)))]
            return QueryTuple(query_var=var, query_time=t, target_value=float(int_values[t, var]))
    raise AssertionError("query window empty")  # unreachable: intervened pool is never empty


def generate_sample(cfg: PriorConfig, sample_seed: int) -> PairedSample:
    """Generate one fully deterministic PairedSample from (config, seed)."""
    rng = np.random.default_rng(sample_seed)
    tscm = sample_tscm(cfg, rng)
    spec = sample_intervention(tscm, cfg, rng)
    length = cfg.seq_len + cfg.burn_in
    regime_path = None
    if isinstance(tscm, RegimeSwitchingTscm):
        regime_path = simulate_regime_chain(tscm.transition, length, rng)
    obs_noise = draw_noise(tscm, length, rng)
    int_noise = draw_noise(tscm, length, rng) if cfg.resample_noise else obs_noise
    obs, intr = simulate_pair(cfg, tscm, spec, regime_path, obs_noise, int_noise)
    reach = reachability_table(tscm, spec, cfg.seq_len, obs.regime_path)
    query = _sample_query(spec, reach, cfg.seq_len, tscm.n_vars, intr.values, rng)
    return PairedSample(tscm=tscm, intervention=spec, obs=obs, int=intr,
                        query=query, sample_seed=sample_seed)


# -- record codec -------------------------------------------------------------


def _pack_bits(matrix: np.ndarray) -> bytes:
    return np.packbits(matrix.reshape(-1).astype(np.uint8), bitorder="little").tobytes()


def _unpack_bits(buf: bytes, n: int) -> np.ndarray:
    flat = np.unpackbits(np.frombuffer(buf, dtype=np.uint8), count=n * n, bitorder="little")
    return flat.reshape(n, n)


def _encode_graph(dag: LaggedDag, out: bytearray) -> None:
    out += struct.pack("<f", dag.edge_prob)
    for k in range(dag.max_lag + 1):
        out += _pack_bits(dag.adjacency[k])
    out += dag.topo_order.astype(np.uint8).tobytes()


def _encode_mechanisms(mechs, out: bytearray) -> None:
    for mech in mechs:
        out += struct.pack("<H", len(mech.parents))
        for (j, lag), w, a in zip(mech.parents, mech.weights, mech.activations):
            out += struct.pack("<BBBf", j, lag, a, w)
        out += struct.pack("<f", mech.bias)


def encode_record(sample: PairedSample) -> bytes:
    tscm = sample.tscm
    spec = sample.intervention
    n, k = tscm.n_vars, tscm.max_lag
    T = sample.obs.seq_len
    if isinstance(tscm, RegimeSwitchingTscm):
        graphs, mech_sets, n_regimes = tscm.graphs, tscm.mechanisms, tscm.n_regimes
    else:
        graphs, mech_sets, n_regimes = (tscm.graph,), (tscm.mechanisms,), 1
    out = bytearray()
    out += _REC_HEADER.pack(n, k, T, FAMILIES.index(tscm.family_tag),
                            INTERVENTION_KINDS.index(spec.kind), n_regimes, 0)
    for dag, mechs in zip(graphs, mech_sets):
        _encode_graph(dag, out)
        _encode_mechanisms(mechs, out)
    for ns in tscm.noise:
        out += struct.pack("<Bf", NOISE_FAMILIES.index(ns.family), ns.scale)
    if n_regimes > 1:
        out += tscm.transition.astype("<f8").tobytes()
        out += sample.obs.regime_path.astype(np.uint8).tobytes()
    out += sample.obs.values.astype("<f4").tobytes()
    out += sample.int.values.astype("<f4").tobytes()
    out += struct.pack("<B", len(spec.targets))
    out += bytes(spec.targets)
    out += struct.pack("<H", len(spec.times))
    out += np.asarray(spec.times, dtype="<u2").tobytes()
    if spec.kind == "hard":
        out += struct.pack("<d", spec.value)
    elif spec.kind == "soft":
        out += np.asarray(spec.shift, dtype="<f8").tobytes()
    else:
        prof = spec.profile
        out += struct.pack("<BB", PROFILE_KINDS.index(prof.kind), len(prof.params))
        out += np.asarray(prof.params, dtype="<f8").tobytes()
        out += np.asarray(prof.trajectory, dtype="<f8").tobytes()
    out += struct.pack("<HHf", sample.query.query_var, sample.query.query_time,
                       np.float32(sample.query.target_value))
    out += struct.pack("<Q", sample.sample_seed)
    return bytes(out)


class _Cursor:
    """Bounds-checked reader over one record's bytes."""

    __slots__ = ("buf", "pos", "base")

    def __init__(self, buf: bytes, base_offset: int):
        self.buf = buf
        self.pos = 0
        self.base = base_offset

    def take(self, size: int) -> bytes:
        if self.pos + size > len(self.buf):
            raise FormatError(
                f"record truncated at offset {self.base + len(self.buf)}: "
                f"needed {size} more bytes at record offset {self.pos}"
            )
        chunk = self.buf[self.pos:self.pos + size]
        self.pos += size
        return chunk

    def unpack(self, st: struct.Struct):
        return st.unpack(self.take(st.size))


_U16 = struct.Struct("<H")
_U8F32 = struct.Struct("<Bf")
_PARENT = struct.Struct("<BBBf")
_F32 = struct.Struct("<f")
_F64 = struct.Struct("<d")
_QUERY = struct.Struct("<HHf")
_U64 = struct.Struct("<Q")


def _decode_graph(cur: _Cursor, n: int, k: int) -> LaggedDag:
    (edge_prob,) = cur.unpack(_F32)
    nbytes = (n * n + 7) // 8
    adjacency = np.stack([_unpack_bits(cur.take(nbytes), n) for _ in range(k + 1)])
    topo = np.frombuffer(cur.take(n), dtype=np.uint8).astype(np.int64)
    return LaggedDag(n_vars=n, max_lag=k, adjacency=adjacency, topo_order=topo,
                     edge_prob=float(edge_prob))


def _decode_mechanisms(cur: _Cursor, dag: LaggedDag) -> tuple[Mechanism, ...]:
    mechs = []
    for _ in range(dag.n_vars):
        (n_par,) = cur.unpack(_U16)
        parents, weights, acts = [], [], []
        for _ in range(n_par):
            j, lag, a, w = cur.unpack(_PARENT)
            parents.append((j, lag))
            weights.append(float(w))
            acts.append(a)
        (bias,) = cur.unpack(_F32)
        mechs.append(Mechanism(parents=tuple(parents), weights=tuple(weights),
                               bias=float(bias), activations=tuple(acts)))
    return tuple(mechs)


def decode_record(buf: bytes, base_offset: int = 0) -> PairedSample:
    cur = _Cursor(buf, base_offset)
    n, k, T, fam_id, kind_id, n_regimes, _pad = cur.unpack(_REC_HEADER)
    if not (fam_id < len(FAMILIES) and kind_id < len(INTERVENTION_KINDS) and n_regimes >= 1):
        raise FormatError(f"bad record header at offset {base_offset}")
    graphs, mech_sets = [], []
    for _ in range(n_regimes):
        dag = _decode_graph(cur, n, k)
        graphs.append(dag)
        mech_sets.append(_decode_mechanisms(cur, dag))
    noise = []
    for _ in range(n):
        fam, scale = cur.unpack(_U8F32)
        noise.append(NoiseSpec(family=NOISE_FAMILIES[fam], scale=float(scale)))
    regime_path = None
    if n_regimes > 1:
        transition = np.frombuffer(cur.take(8 * n_regimes * n_regimes), dtype="<f8")
        transition = transition.reshape(n_regimes, n_regimes).copy()
        regime_path = np.frombuffer(cur.take(T), dtype=np.uint8).astype(np.int64)
        tscm: AnyTscm = RegimeSwitchingTscm(
            graphs=tuple(graphs), mechanisms=tuple(mech_sets),
            noise=tuple(noise), transition=transition,
        )
    else:
        tscm = Tscm(graph=graphs[0], mechanisms=mech_sets[0], noise=tuple(noise),
                    family_tag=FAMILIES[fam_id])
    obs_vals = np.frombuffer(cur.take(4 * T * n), dtype="<f4").reshape(T, n).copy()
    int_vals = np.frombuffer(cur.take(4 * T * n), dtype="<f4").reshape(T, n).copy()
    (n_targets,) = cur.unpack(struct.Struct("<B"))
    targets = tuple(cur.take(n_targets))
    (n_times,) = cur.unpack(_U16)
    times = tuple(int(t) for t in np.frombuffer(cur.take(2 * n_times), dtype="<u2"))
    kind = INTERVENTION_KINDS[kind_id]
    value = shift = profile = None
    if kind == "hard":
        (value,) = cur.unpack(_F64)
    elif kind == "soft":
        shift = tuple(float(x) for x in np.frombuffer(cur.take(8 * n_targets), dtype="<f8"))
    else:
        prof_id, n_params = cur.unpack(struct.Struct("<BB"))
        params = tuple(float(x) for x in np.frombuffer(cur.take(8 * n_params), dtype="<f8"))
        traj = tuple(float(x) for x in np.frombuffer(cur.take(8 * n_times), dtype="<f8"))
        profile = Profile(kind=PROFILE_KINDS[prof_id], params=params, trajectory=traj)
    spec = InterventionSpec(targets=targets, times=times, kind=kind,
                            value=value, shift=shift, profile=profile)
    qvar, qtime, qtarget = cur.unpack(_QUERY)
    (sample_seed,) = cur.unpack(_U64)
    if cur.pos != len(buf):
        raise FormatError(
            f"record has {len(buf) - cur.pos} trailing bytes at offset {base_offset + cur.pos}"
        )
    return PairedSample(
        tscm=tscm,
        intervention=spec,
        obs=Series(values=obs_vals, regime_path=regime_path),
        int=Series(values=int_vals, regime_path=regime_path),
        query=QueryTuple(query_var=qvar, query_time=qtime, target_value=float(np.float32(qtarget))),
        sample_seed=sample_seed,
    )


def write_record(sink: BinaryIO, sample: PairedSample) -> int:
    """Append one encoded record to a binary sink; returns the byte count."""
    data = encode_record(sample)
    sink.write(data)
    return len(data)


# -- corpus files -------------------------------------------------------------


class CorpusReader:
    """Random-access reader over an immutable corpus file."""

    def __init__(self, path):
        self.path = os.fspath(path)
        self._fh = open(self.path, "rb")
        raw = self._fh.read(_HEADER.size)
        if len(raw) < _HEADER.size:
            raise FormatError(f"corpus header truncated at offset {len(raw)}")
        magic, version, seq_len, count, base_seed, digest = _HEADER.unpack(raw)
        if magic != MAGIC:
            raise FormatError(f"bad magic at offset 0: {magic!r}")
        if version != VERSION:
            raise FormatError(f"bad version at offset 4: {version} (expected {VERSION})")
        self.seq_len = seq_len
        self.n_samples = count
        self.base_seed = base_seed
        self.config_digest = digest
        table = self._fh.read(8 * (count + 1))
        if len(table) < 8 * (count + 1):
            raise FormatError(f"offset table truncated at offset {_HEADER.size + len(table)}")
        self._offsets = np.frombuffer(table, dtype="<u8")
        self._base = _HEADER.size + 8 * (count + 1)
        expected = self._base + int(self._offsets[-1])
        actual = os.fstat(self._fh.fileno()).st_size
        if actual != expected:
            raise FormatError(f"file size {actual} != expected {expected} (truncated at offset {actual})")
        if (np.diff(self._offsets.astype(np.int64)) < 0).any():
            raise FormatError("offset table is not monotone")

    def __len__(self) -> int:
        return self.n_samples

    def read(self, index: int) -> PairedSample:
        if not 0 <= index < self.n_samples:
            raise InputError(f"record index {index} out of range [0, {self.n_samples})")
        start, stop = int(self._offsets[index]), int(self._offsets[index + 1])
        self._fh.seek(self._base + start)
        buf = self._fh.read(stop - start)
        if len(buf) != stop - start:
            raise FormatError(f"record {index} truncated at offset {self._base + start + len(buf)}")
        return decode_record(buf, self._base + start)

    def __iter__(self) -> Iterator[PairedSample]:
        for i in range(self.n_samples):
            yield self.read(i)

    def iter_lenient(self) -> Iterator:
        """Like iteration but yields the exception object for broken records."""
        for i in range(self.n_samples):
            try:
                yield self.read(i)
            except FormatError as exc:
                yield exc

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_record(corpus: CorpusReader, index: int) -> PairedSample:
    return corpus.read(index)


def _write_header(fh: BinaryIO, cfg: PriorConfig, base_seed: int, count: int) -> None:
    fh.write(_HEADER.pack(MAGIC, VERSION, cfg.seq_len, count, base_seed, cfg.digest()))


def write_corpus(path, cfg: PriorConfig, base_seed: int, samples: Iterable[PairedSample]) -> None:
    """Write an explicit list of samples (test corpora, subsets)."""
    samples = list(samples)
    blobs = [encode_record(s) for s in samples]
    offsets = np.zeros(len(blobs) + 1, dtype="<u8")
    offsets[1:] = np.cumsum([len(b) for b in blobs])
    tmp = os.fspath(path) + ".tmp"
    try:
        with open(tmp, "wb") as fh:
            _write_header(fh, cfg, base_seed, len(blobs))
            fh.write(offsets.tobytes())
            for blob in blobs:
                fh.write(blob)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _encode_batch(cfg: PriorConfig, base_seed: int, start: int, count: int) -> list[bytes]:
    seeds = derive_sample_seeds(base_seed, start, count)
    return [encode_record(generate_sample(cfg, int(s))) for s in seeds]


def generate_corpus(
    cfg: PriorConfig,
    base_seed: int,
    n_samples: int,
    out_path,
    n_workers: int = 1,
    chunk_size: int = 256,
) -> None:
    """Generate and write a corpus; the file is bit-identical for any n_workers."""
    if n_samples < 1:
        raise InputError(f"n_samples must be >= 1, got {n_samples}")
    starts = list(range(0, n_samples, chunk_size))
    chunks = [(s, min(chunk_size, n_samples - s)) for s in starts]
    tmp = os.fspath(out_path) + ".tmp"
    try:
        with open(tmp, "wb") as fh:
            _write_header(fh, cfg, base_seed, n_samples)
            table_pos = fh.tell()
            offsets = np.zeros(n_samples + 1, dtype="<u8")
            fh.write(offsets.tobytes())  # placeholder
            pos = 0
            idx = 0
            if n_workers > 1:
                with ProcessPoolExecutor(max_workers=n_workers) as pool:
                    batches = pool.map(
                        _encode_batch,
                        (cfg for _ in chunks),
                        (base_seed for _ in chunks),
                        (c[0] for c in chunks),
                        (c[1] for c in chunks),
                    )
                    for batch in batches:
                        for blob in batch:
                            offsets[idx + 1] = pos + len(blob)
                            pos += len(blob)
                            idx += 1
                            fh.write(blob)
            else:
                for start, count in chunks:
                    for blob in _encode_batch(cfg, base_seed, start, count):
                        offsets[idx + 1] = pos + len(blob)
                        pos += len(blob)
                        idx += 1
                        fh.write(blob)
            fh.seek(table_pos)
            fh.write(offsets.tobytes())
        os.replace(tmp, out_path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# -- JSON / CSV export --------------------------------------------------------


def _graph_to_json(dag: LaggedDag) -> dict:
    return {
        "edge_prob": None if np.isnan(dag.edge_prob) else dag.edge_prob,
        "topo_order": dag.topo_order.tolist(),
        "adjacency": dag.adjacency.astype(int).tolist(),
    }


def _mech_to_json(mech: Mechanism) -> dict:
    return {
        "parents": [list(p) for p in mech.parents],
        "weights": list(mech.weights),
        "bias": mech.bias,
        "activations": [ACTIVATIONS[a] for a in mech.activations],
    }


def sample_to_json(sample: PairedSample) -> str:
    """One JSON object (single line) with every field of the sample."""
    tscm = sample.tscm
    spec = sample.intervention
    if isinstance(tscm, RegimeSwitchingTscm):
        graph = {
            "regimes": [_graph_to_json(g) for g in tscm.graphs],
            "transition": tscm.transition.tolist(),
            "regime_path": sample.obs.regime_path.tolist(),
        }
        mechanisms = [[_mech_to_json(m) for m in mechs] for mechs in tscm.mechanisms]
    else:
        graph = _graph_to_json(tscm.graph)
        mechanisms = [_mech_to_json(m) for m in tscm.mechanisms]
    intervention = {"kind": spec.kind, "targets": list(spec.targets), "times": list(spec.times)}
    if spec.kind == "hard":
        intervention["value"] = spec.value
    elif spec.kind == "soft":
        intervention["shift"] = list(spec.shift)
    else:
        intervention["profile"] = {
            "kind": spec.profile.kind,
            "params": list(spec.profile.params),
            "trajectory": list(spec.profile.trajectory),
        }
    obj = {
        "n_vars": tscm.n_vars,
        "max_lag": tscm.max_lag,
        "seq_len": sample.obs.seq_len,
        "family": tscm.family_tag,
        "graph": graph,
        "mechanisms": mechanisms,
        "noise": [{"family": ns.family, "scale": ns.scale} for ns in tscm.noise],
        "intervention": intervention,
        "obs": [[float(v) for v in row] for row in sample.obs.values],
        "int": [[float(v) for v in row] for row in sample.int.values],
        "query": {"var": sample.query.query_var, "time": sample.query.query_time,
                  "target": sample.query.target_value},
        "seed": sample.sample_seed,
    }
    return json.dumps(obj)


def _graph_from_json(obj: dict, max_lag: int) -> LaggedDag:
    return LaggedDag(
        n_vars=len(obj["topo_order"]),
        max_lag=max_lag,
        adjacency=np.asarray(obj["adjacency"], dtype=np.uint8),
        topo_order=np.asarray(obj["topo_order"], dtype=np.int64),
        edge_prob=float("nan") if obj["edge_prob"] is None else obj["edge_prob"],
    )


def _mech_from_json(obj: dict) -> Mechanism:
    return Mechanism(
        parents=tuple((p[0], p[1]) for p in obj["parents"]),
        weights=tuple(obj["weights"]),
        bias=obj["bias"],
        activations=tuple(ACTIVATIONS.index(a) for a in obj["activations"]),
    )


def sample_from_json(line: str) -> PairedSample:
    """Inverse of :func:`sample_to_json` (float-exact round trip)."""
    obj = json.loads(line)
    k = obj["max_lag"]
    noise = tuple(NoiseSpec(family=ns["family"], scale=ns["scale"]) for ns in obj["noise"])
    regime_path = None
    if obj["family"] == "regime_switching":
        graph = obj["graph"]
        regime_path = np.asarray(graph["regime_path"], dtype=np.int64)
        tscm: AnyTscm = RegimeSwitchingTscm(
            graphs=tuple(_graph_from_json(g, k) for g in graph["regimes"]),
            mechanisms=tuple(tuple(_mech_from_json(m) for m in mechs) for mechs in obj["mechanisms"]),
            noise=noise,
            transition=np.asarray(graph["transition"], dtype=np.float64),
        )
    else:
        tscm = Tscm(
            graph=_graph_from_json(obj["graph"], k),
            mechanisms=tuple(_mech_from_json(m) for m in obj["mechanisms"]),
            noise=noise,
            family_tag=obj["family"],
        )
    iv = obj["intervention"]
    profile = None
    if "profile" in iv:
        profile = Profile(kind=iv["profile"]["kind"], params=tuple(iv["profile"]["params"]),
                          trajectory=tuple(iv["profile"]["trajectory"]))
    spec = InterventionSpec(
        targets=tuple(iv["targets"]),
        times=tuple(iv["times"]),
        kind=iv["kind"],
        value=iv.get("value"),
        shift=tuple(iv["shift"]) if "shift" in iv else None,
        profile=profile,
    )
    obs = Series(values=np.asarray(obj["obs"], dtype=np.float32), regime_path=regime_path)
    intr = Series(values=np.asarray(obj["int"], dtype=np.float32), regime_path=regime_path)
    return PairedSample(
        tscm=tscm, intervention=spec, obs=obs, int=intr,
        query=QueryTuple(obj["query"]["var"], obj["query"]["time"], obj["query"]["target"]),
        sample_seed=obj["seed"],
    )


def export_jsonl(corpus: CorpusReader, start: int = 0, stop: Optional[int] = None) -> Iterator[str]:
    """Yield one JSON line per record in [start, stop)."""
    stop = corpus.n_samples if stop is None else stop
    if not (0 <= start <= stop <= corpus.n_samples):
        raise InputError(f"range [{start}, {stop}) out of bounds for {corpus.n_samples} records")
    for i in range(start, stop):
        yield sample_to_json(corpus.read(i))


def series_csv(series: Series) -> str:
    """Header row t,x0,...,x{N-1} plus one row per time step."""
    n = series.n_vars
    lines = ["t," + ",".join(f"x{i}" for i in range(n))]
    for t, row in enumerate(series.values):
        lines.append(f"{t}," + ",".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def export_csv(corpus: CorpusReader, index: int) -> dict[str, str]:
    """Per-series CSV tables for one record, keyed 'obs' and 'int'."""
    sample = corpus.read(index)
    return {"obs": series_csv(sample.obs), "int": series_csv(sample.int)}


def paired_csv(sample: PairedSample) -> str:
    """Side-by-side CSV: t, obs_x0..obs_x{N-1}, int_x0..int_x{N-1}."""
    n = sample.obs.n_vars
    header = ["t"] + [f"obs_x{i}" for i in range(n)] + [f"int_x{i}" for i in range(n)]
    lines = [",".join(header)]
    for t in range(sample.obs.seq_len):
        row = [str(t)]
        row += [repr(float(v)) for v in sample.obs.values[t]]
        row += [repr(float(v)) for v in sample.int.values[t]]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"
