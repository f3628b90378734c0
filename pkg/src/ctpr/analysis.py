"""Causal reachability in the unrolled graph and corpus-level statistics.

Reachability drives both the three-way query classification (intervened /
downstream / non_causal) and the shared-noise invariance check: any cell not
reachable from the intervention set must be bit-identical across an obs/int
pair simulated with the same noise.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from ctpr import _kernels
from ctpr.scm_core import (
    FAMILIES,
    INTERVENTION_KINDS,
    AnyTscm,
    InterventionSpec,
    QueryTuple,
    RegimeSwitchingTscm,
)

INTERVENED = "intervened"
DOWNSTREAM = "downstream"
NON_CAUSAL = "non_causal"
QUERY_CLASSES = (INTERVENED, DOWNSTREAM, NON_CAUSAL)


def _stacked_graph(tscm: AnyTscm):
    if isinstance(tscm, RegimeSwitchingTscm):
        adjacency = np.stack([g.adjacency for g in tscm.graphs]).astype(np.uint8)
        topo = np.stack([g.topo_order for g in tscm.graphs]).astype(np.int64)
    else:
        adjacency = tscm.graph.adjacency[None, ...].astype(np.uint8)
        topo = tscm.graph.topo_order[None, :].astype(np.int64)
    return adjacency, topo


def reachability_table(
    tscm: AnyTscm,
    spec: InterventionSpec,
    T: int,
    regime_path: Optional[np.ndarray] = None,
    union_regimes: bool = False,
) -> np.ndarray:
    """(T, N) boolean table: seeds plus every cell reachable from them.

    An edge (j, s) -> (i, s+k) exists iff the graph active at time s+k has a
    lag-k edge j -> i.  For regime-switching TSCMs the realized regime path
    decides which graph is active; ``union_regimes`` instead treats an edge
    as present if any regime has it.
    """
    n = tscm.n_vars
    adjacency, topo = _stacked_graph(tscm)
    if isinstance(tscm, RegimeSwitchingTscm):
        if union_regimes:
            adjacency = adjacency.max(axis=0, keepdims=True)
            topo = topo[:1]  # union graph may not respect any single order; see below
            path = np.zeros(T, dtype=np.int64)
        else:
            if regime_path is None:
                raise ValueError("regime_path required (or pass union_regimes=True)")
            path = np.asarray(regime_path, dtype=np.int64)
    else:
        path = np.zeros(T, dtype=np.int64)
    reached = np.zeros((T, n), dtype=np.uint8)
    for i in spec.targets:
        for t in spec.times:
            reached[t, i] = 1
    if union_regimes and isinstance(tscm, RegimeSwitchingTscm):
        # the union of per-regime G_0s may mix topological orders, so iterate
        # the instantaneous closure to a fixed point instead of one pass
        for _ in range(n):
            before = reached.copy()
            _kernels._reach(reached, adjacency, topo, path)
            if np.array_equal(before, reached):
                break
    else:
        _kernels._reach(reached, adjacency, topo, path)
    return reached.astype(bool)


def reachable_set(
    tscm: AnyTscm,
    spec: InterventionSpec,
    T: int,
    regime_path: Optional[np.ndarray] = None,
    union_regimes: bool = False,
) -> set[tuple[int, int]]:
    """Forward closure of the intervention seeds as a set of (var, time)."""
    table = reachability_table(tscm, spec, T, regime_path, union_regimes)
    vs, times = np.nonzero(table.T)
    return set(zip(vs.tolist(), times.tolist()))


def classify_query(
    tscm: AnyTscm,
    spec: InterventionSpec,
    query: QueryTuple,
    regime_path: Optional[np.ndarray] = None,
    reach: Optional[np.ndarray] = None,
) -> str:
    """Three-way split: the target variable itself, a cell causally reachable
    from the intervention, or neither.  ``reach`` short-circuits the closure
    when the caller already computed it."""
    if query.query_var in spec.targets:
        return INTERVENED
    if reach is None:
        T = max(query.query_time + 1, max(spec.times) + 1)
        reach = reachability_table(tscm, spec, T, regime_path)
    if reach[query.query_time, query.query_var]:
        return DOWNSTREAM
    return NON_CAUSAL


# -- corpus statistics --------------------------------------------------------

VALUE_HIST_EDGES = np.linspace(-10.0, 10.0, 41)


@dataclass
class StatsReport:
    """Aggregate statistics of a corpus, mirroring the prior's advertised
    properties.

    ``effect_size`` per record is the mean absolute obs/int difference over
    the intervened cells of the target variables.  ``value_histogram`` pools
    hard values, soft shifts and time-varying trajectory values (clipped into
    the outer bins).
    """

    n_records: int = 0
    divergence_rate: float = 0.0
    n_unreadable: int = 0
    family_freqs: dict = field(default_factory=dict)
    intervention_kind_freqs: dict = field(default_factory=dict)
    graph_size_histogram: dict = field(default_factory=dict)
    effect_size_mean: float = float("nan")
    effect_size_std: float = float("nan")
    effect_size_median: float = float("nan")
    obs_mean: float = float("nan")
    obs_std: float = float("nan")
    int_mean: float = float("nan")
    int_std: float = float("nan")
    edge_prob_histogram: dict = field(default_factory=dict)
    start_time_histogram: dict = field(default_factory=dict)
    value_histogram: dict = field(default_factory=dict)
    query_class_freqs: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(self.__dict__, sort_keys=True)

    def render_table(self) -> str:
        lines = [
            f"records            {self.n_records}",
            f"unreadable         {self.n_unreadable}",
            f"divergence_rate    {self.divergence_rate:.6g}",
            f"obs mean/std       {self.obs_mean:.4f} / {self.obs_std:.4f}",
            f"int mean/std       {self.int_mean:.4f} / {self.int_std:.4f}",
            f"effect size        mean {self.effect_size_mean:.4f}  std {self.effect_size_std:.4f}"
            f"  median {self.effect_size_median:.4f}",
            "family freqs       " + _freqline(self.family_freqs),
            "intervention kinds " + _freqline(self.intervention_kind_freqs),
            "query classes      " + _freqline(self.query_class_freqs),
            "graph sizes        " + _freqline(self.graph_size_histogram, as_count=True),
            "start times        " + _freqline(self.start_time_histogram, as_count=True),
        ]
        return "\n".join(lines)


def _freqline(d: dict, as_count: bool = False) -> str:
    if not d:
        return "(none)"
    items = sorted(d.items(), key=lambda kv: str(kv[0]))
    if as_count:
        return "  ".join(f"{k}:{v}" for k, v in items)
    return "  ".join(f"{k}:{v:.3f}" for k, v in items)


def _mean_std(total: float, total_sq: float, count: int) -> tuple[float, float]:
    if count == 0:
        return float("nan"), float("nan")
    mean = total / count
    var = max(total_sq / count - mean * mean, 0.0)
    return mean, math.sqrt(var)


def corpus_stats(samples: Iterable) -> StatsReport:
    """One pass over PairedSamples (or a corpus reader) producing a StatsReport.

    Unreadable records (the reader yields an exception object) are counted,
    not fatal.
    """
    rep = StatsReport()
    fam_counts = dict.fromkeys(FAMILIES, 0)
    kind_counts = dict.fromkeys(INTERVENTION_KINDS, 0)
    class_counts = dict.fromkeys(QUERY_CLASSES, 0)
    size_counts: dict[int, int] = {}
    start_counts: dict[int, int] = {}
    edge_probs: list[float] = []
    effect_sizes: list[float] = []
    value_pool: list[float] = []
    obs_sum = obs_sq = int_sum = int_sq = 0.0
    n_cells = 0
    n_records = 0
    n_diverged = 0

    for sample in samples:
        if isinstance(sample, Exception):
            rep.n_unreadable += 1
            continue
        n_records += 1
        obs = sample.obs.values
        intr = sample.int.values
        if not (np.isfinite(obs).all() and np.isfinite(intr).all()):
            n_diverged += 1
        fam_counts[sample.tscm.family_tag] += 1
        kind_counts[sample.intervention.kind] += 1
        size_counts[sample.tscm.n_vars] = size_counts.get(sample.tscm.n_vars, 0) + 1
        t0 = sample.intervention.times[0]
        start_counts[t0] = start_counts.get(t0, 0) + 1
        if isinstance(sample.tscm, RegimeSwitchingTscm):
            for g in sample.tscm.graphs:
                if not math.isnan(g.edge_prob):
                    edge_probs.append(g.edge_prob)
        elif not math.isnan(sample.tscm.graph.edge_prob):
            edge_probs.append(sample.tscm.graph.edge_prob)
        cells = np.ix_(list(sample.intervention.times), list(sample.intervention.targets))
        effect_sizes.append(float(np.abs(intr[cells] - obs[cells]).mean()))
        spec = sample.intervention
        if spec.kind == "hard":
            value_pool.append(spec.value)
        elif spec.kind == "soft":
            value_pool.extend(spec.shift)
        else:
            value_pool.extend(spec.profile.trajectory)
        obs64 = obs.astype(np.float64, copy=False)
        int64 = intr.astype(np.float64, copy=False)
        obs_sum += float(obs64.sum())
        obs_sq += float((obs64 * obs64).sum())
        int_sum += float(int64.sum())
        int_sq += float((int64 * int64).sum())
        n_cells += obs.size
        cls = classify_query(
            sample.tscm, spec, sample.query,
            regime_path=sample.obs.regime_path,
        )
        class_counts[cls] += 1

    rep.n_records = n_records
    if n_records == 0:
        return rep
    rep.divergence_rate = n_diverged / n_records
    rep.family_freqs = {k: v / n_records for k, v in fam_counts.items()}
    rep.intervention_kind_freqs = {k: v / n_records for k, v in kind_counts.items()}
    rep.query_class_freqs = {k: v / n_records for k, v in class_counts.items()}
    rep.graph_size_histogram = dict(sorted(size_counts.items()))
    rep.start_time_histogram = dict(sorted(start_counts.items()))
    eff = np.asarray(effect_sizes)
    rep.effect_size_mean = float(eff.mean())
    rep.effect_size_std = float(eff.std())
    rep.effect_size_median = float(np.median(eff))
    rep.obs_mean, rep.obs_std = _mean_std(obs_sum, obs_sq, n_cells)
    rep.int_mean, rep.int_std = _mean_std(int_sum, int_sq, n_cells)
    if edge_probs:
        counts, edges = np.histogram(edge_probs, bins=20, range=(0.0, 1.0))
        rep.edge_prob_histogram = {round(float(e), 3): int(c) for e, c in zip(edges[:-1], counts)}
    if value_pool:
        clipped = np.clip(value_pool, VALUE_HIST_EDGES[0], VALUE_HIST_EDGES[-1])
        counts, edges = np.histogram(clipped, bins=VALUE_HIST_EDGES)
        rep.value_histogram = {round(float(e), 3): int(c) for e, c in zip(edges[:-1], counts)}
    return rep
