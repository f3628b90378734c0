"""Shared builders for hand-constructed TSCMs and small corpora."""

from collections import deque

import numpy as np
import pytest

from ctpr.prior import PriorConfig
from ctpr.scm_core import LaggedDag, Mechanism, NoiseSpec, RegimeSwitchingTscm, Tscm

IDENTITY = 0  # activation ids
SQUARE = 5


def dag_from_edges(n, max_lag, edges, topo_order=None):
    """edges: iterable of (parent, child, lag)."""
    adjacency = np.zeros((max_lag + 1, n, n), dtype=np.uint8)
    for j, i, k in edges:
        adjacency[k, j, i] = 1
    if topo_order is None:
        topo_order = np.arange(n)
    return LaggedDag(n_vars=n, max_lag=max_lag, adjacency=adjacency,
                     topo_order=np.asarray(topo_order, dtype=np.int64))


def mechanisms_for(dag, weight=1.0, bias=0.0, activation=IDENTITY):
    mechs = []
    for i in range(dag.n_vars):
        parents = dag.parents_of(i)
        mechs.append(Mechanism(
            parents=parents,
            weights=(weight,) * len(parents),
            bias=bias,
            activations=(activation,) * len(parents),
        ))
    return tuple(mechs)


def build_tscm(n, max_lag, edges, weight=1.0, bias=0.0, activation=IDENTITY,
               noise_family="gaussian", noise_scale=1.0, topo_order=None):
    dag = dag_from_edges(n, max_lag, edges, topo_order)
    return Tscm(
        graph=dag,
        mechanisms=mechanisms_for(dag, weight, bias, activation),
        noise=tuple(NoiseSpec(noise_family, noise_scale) for _ in range(n)),
    )


def chain_tscm(n, weight=1.0, **kwargs):
    """Lag-1 path x0 -> x1 -> ... -> x_{n-1}."""
    edges = [(i - 1, i, 1) for i in range(1, n)]
    return build_tscm(n, 1, edges, weight=weight, **kwargs)


def brute_force_reachable(tscm, spec, T, regime_path=None):
    """Oracle: materialize the T*N unrolled graph and BFS from the seeds."""
    n = tscm.n_vars
    k_max = tscm.max_lag
    succ = {(j, s): [] for j in range(n) for s in range(T)}
    for s2 in range(T):  # edges are defined by the regime active at the child's time
        if isinstance(tscm, RegimeSwitchingTscm):
            dag = tscm.graphs[int(regime_path[s2])]
        else:
            dag = tscm.graph
        for k in range(k_max + 1):
            s1 = s2 - k
            if s1 < 0:
                continue
            for j in range(n):
                for i in range(n):
                    if dag.adjacency[k, j, i]:
                        succ[(j, s1)].append((i, s2))
    seen = {(i, t) for i in spec.targets for t in spec.times}
    queue = deque(seen)
    while queue:
        node = queue.popleft()
        for nxt in succ[node]:
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return seen


@pytest.fixture(scope="session")
def default_cfg():
    return PriorConfig()


@pytest.fixture(scope="session")
def small_corpus_path(tmp_path_factory):
    """300-record default-config corpus shared across test modules."""
    from ctpr.dataset import generate_corpus

    path = tmp_path_factory.mktemp("corpus") / "small.ctpr"
    generate_corpus(PriorConfig(), base_seed=1234, n_samples=300, out_path=path, n_workers=2)
    return path
