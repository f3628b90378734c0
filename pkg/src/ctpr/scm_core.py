"""Core domain types for temporal SCMs, interventions, and series.

Conventions used throughout the package:

* time is 0-based, ``t in {0..T-1}``;
* ``adjacency`` is a ``(K+1, N, N)`` uint8 array where ``adjacency[k, j, i]``
  is an edge from variable ``j`` at time ``t-k`` into variable ``i`` at
  time ``t`` (``k = 0`` holds the instantaneous edges);
* lagged parents that would fall before ``t = 0`` simply do not contribute.

All types are frozen dataclasses; array fields are marked read-only at
construction so instances can be shared across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ctpr.errors import InputError

ACTIVATIONS = ("identity", "sin", "cos", "tanh", "abs", "square", "exp_neg_abs")
NOISE_FAMILIES = ("gaussian", "uniform", "laplace")
FAMILIES = ("diverse_nonlinear", "chain", "regime_switching")
INTERVENTION_KINDS = ("hard", "soft", "time_varying")
PROFILE_KINDS = ("step", "ramp", "sinusoidal", "sampled")

ROW_SUM_TOL = 1e-9


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class LaggedDag:
    """Time-lagged DAG over N variables with max lag K.

    ``topo_order`` witnesses acyclicity of the instantaneous slice: every
    edge in ``adjacency[0]`` goes from an earlier to a later position in
    the order.  ``edge_prob`` records the edge probability the graph was
    sampled with (NaN for hand-built or structured graphs).
    """

    n_vars: int
    max_lag: int
    adjacency: np.ndarray  # (K+1, N, N) uint8
    topo_order: np.ndarray  # (N,) int64 permutation
    edge_prob: float = float("nan")

    def __post_init__(self):
        object.__setattr__(self, "adjacency", _freeze(np.asarray(self.adjacency, dtype=np.uint8)))
        object.__setattr__(self, "topo_order", _freeze(np.asarray(self.topo_order, dtype=np.int64)))

    def parents_of(self, var: int) -> tuple[tuple[int, int], ...]:
        """All ``(parent_var, lag)`` pairs feeding ``var``, sorted by (lag, var)."""
        if not 0 <= var < self.n_vars:
            raise InputError(f"variable index {var} out of range [0, {self.n_vars})")
        out = []
        for k in range(self.max_lag + 1):
            for j in range(self.n_vars):
                if self.adjacency[k, j, var]:
                    out.append((j, k))
        out.sort(key=lambda p: (p[1], p[0]))
        return tuple(out)


@dataclass(frozen=True)
class Mechanism:
    """Additive mechanism: sum of weighted activations of parents plus bias.

    ``parents[p]`` is a ``(var, lag)`` pair, ``weights[p]`` its coefficient
    and ``activations[p]`` an index into :data:`ACTIVATIONS`.
    """

    parents: tuple[tuple[int, int], ...]
    weights: tuple[float, ...]
    bias: float
    activations: tuple[int, ...]

    def __post_init__(self):
        if not (len(self.parents) == len(self.weights) == len(self.activations)):
            raise InputError("parents, weights and activations must have equal length")


@dataclass(frozen=True)
class NoiseSpec:
    """Zero-centred additive noise: family name plus scale.

    ``scale`` is the std for gaussian, the half-width for uniform and the
    diversity parameter for laplace.
    """

    family: str
    scale: float

    def __post_init__(self):
        if self.family not in NOISE_FAMILIES:
            raise InputError(f"unknown noise family {self.family!r}")
        if not self.scale > 0:
            raise InputError(f"noise scale must be positive, got {self.scale}")


@dataclass(frozen=True)
class Tscm:
    """A temporal SCM: one graph, one mechanism and one noise spec per variable."""

    graph: LaggedDag
    mechanisms: tuple[Mechanism, ...]
    noise: tuple[NoiseSpec, ...]
    family_tag: str = "diverse_nonlinear"

    @property
    def n_vars(self) -> int:
        return self.graph.n_vars

    @property
    def max_lag(self) -> int:
        return self.graph.max_lag

    @property
    def is_regime_switching(self) -> bool:
        return False


@dataclass(frozen=True)
class RegimeSwitchingTscm:
    """A temporal SCM whose graph and mechanisms switch with a hidden Markov chain.

    All regimes share N and K; the noise specs are regime-independent.
    """

    graphs: tuple[LaggedDag, ...]
    mechanisms: tuple[tuple[Mechanism, ...], ...]  # [regime][var]
    noise: tuple[NoiseSpec, ...]
    transition: np.ndarray  # (R, R) float64, row-stochastic
    family_tag: str = "regime_switching"

    def __post_init__(self):
        object.__setattr__(self, "transition", _freeze(np.asarray(self.transition, dtype=np.float64)))

    @property
    def n_regimes(self) -> int:
        return len(self.graphs)

    @property
    def n_vars(self) -> int:
        return self.graphs[0].n_vars

    @property
    def max_lag(self) -> int:
        return self.graphs[0].max_lag

    @property
    def is_regime_switching(self) -> bool:
        return True


AnyTscm = Tscm | RegimeSwitchingTscm


@dataclass(frozen=True)
class Profile:
    """Materialized time-varying clamp trajectory plus the parameters behind it."""

    kind: str
    params: tuple[float, ...]
    trajectory: tuple[float, ...]

    def __post_init__(self):
        if self.kind not in PROFILE_KINDS:
            raise InputError(f"unknown profile kind {self.kind!r}")


@dataclass(frozen=True)
class InterventionSpec:
    """What do() to apply: targets, times, kind and kind-specific payload.

    Exactly one of ``value`` (hard), ``shift`` (soft, one entry per target)
    or ``profile`` (time_varying, trajectory aligned with ``times``) is set.
    """

    targets: tuple[int, ...]
    times: tuple[int, ...]
    kind: str
    value: Optional[float] = None
    shift: Optional[tuple[float, ...]] = None
    profile: Optional[Profile] = None

    def __post_init__(self):
        if self.kind not in INTERVENTION_KINDS:
            raise InputError(f"unknown intervention kind {self.kind!r}")
        if not self.targets:
            raise InputError("intervention needs at least one target")
        if not self.times:
            raise InputError("intervention needs at least one time step")
        if list(self.times) != sorted(set(self.times)):
            raise InputError("intervention times must be sorted and unique")
        populated = [self.value is not None, self.shift is not None, self.profile is not None]
        expected = [self.kind == "hard", self.kind == "soft", self.kind == "time_varying"]
        if populated != expected:
            raise InputError(f"payload does not match kind {self.kind!r}")
        if self.shift is not None and len(self.shift) != len(self.targets):
            raise InputError("soft intervention needs one shift per target")
        if self.profile is not None and len(self.profile.trajectory) != len(self.times):
            raise InputError("profile trajectory must align with intervention times")


@dataclass(frozen=True)
class Series:
    """A simulated multivariate series: rows are time steps, columns variables."""

    values: np.ndarray  # (T, N) float
    regime_path: Optional[np.ndarray] = None  # (T,) int64

    def __post_init__(self):
        object.__setattr__(self, "values", _freeze(np.asarray(self.values)))
        if self.regime_path is not None:
            object.__setattr__(self, "regime_path", _freeze(np.asarray(self.regime_path, dtype=np.int64)))

    @property
    def seq_len(self) -> int:
        return self.values.shape[0]

    @property
    def n_vars(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class QueryTuple:
    """One prediction target: which variable, when, and the interventional truth."""

    query_var: int
    query_time: int
    target_value: float


@dataclass
class Verdict:
    """Outcome of a structural validity check."""

    ok: bool
    violations: list[str] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.ok


def _check_graph(dag: LaggedDag, label: str, violations: list[str]) -> None:
    n, k = dag.n_vars, dag.max_lag
    if n < 1:
        violations.append(f"{label}: n_vars must be >= 1")
        return
    if k < 0:
        violations.append(f"{label}: max_lag must be >= 0")
        return
    if dag.adjacency.shape != (k + 1, n, n):
        violations.append(f"{label}: adjacency shape {dag.adjacency.shape} != {(k + 1, n, n)}")
        return
    if sorted(dag.topo_order.tolist()) != list(range(n)):
        violations.append(f"{label}: topo_order is not a permutation of 0..{n - 1}")
        return
    g0 = dag.adjacency[0]
    for i in range(n):
        if g0[i, i]:
            violations.append(f"{label}: instantaneous self-loop on variable {i}")
    # position of each variable in the order; every G_0 edge must go forward
    pos = np.empty(n, dtype=np.int64)
    pos[dag.topo_order] = np.arange(n)
    for j in range(n):
        for i in range(n):
            if g0[j, i] and pos[j] >= pos[i] and j != i:
                violations.append(
                    f"{label}: instantaneous edge {j}->{i} violates topological order (cycle risk)"
                )


def _check_mechanisms(dag: LaggedDag, mechanisms: Sequence[Mechanism], label: str, violations: list[str]) -> None:
    if len(mechanisms) != dag.n_vars:
        violations.append(f"{label}: {len(mechanisms)} mechanisms for {dag.n_vars} variables")
        return
    for i, mech in enumerate(mechanisms):
        declared = sorted(mech.parents, key=lambda p: (p[1], p[0]))
        from_graph = list(dag.parents_of(i))
        if declared != from_graph:
            violations.append(
                f"{label}: parent/graph mismatch for variable {i}: "
                f"mechanism lists {declared}, graph has {from_graph}"
            )
        for a in mech.activations:
            if not 0 <= a < len(ACTIVATIONS):
                violations.append(f"{label}: variable {i} uses unknown activation id {a}")


def validate_tscm(tscm: AnyTscm) -> Verdict:
    """Check every structural invariant of a (regime-switching) TSCM.

    Returns a verdict rather than raising: callers that fuzz the prior want
    the full list of violations, not the first one.
    """
    violations: list[str] = []
    if isinstance(tscm, RegimeSwitchingTscm):
        r = tscm.n_regimes
        if r < 2:
            violations.append("regime-switching TSCM needs at least 2 regimes")
        if len(tscm.mechanisms) != len(tscm.graphs):
            violations.append("one mechanism set per regime required")
        n, k = tscm.n_vars, tscm.max_lag
        for ri, dag in enumerate(tscm.graphs):
            if dag.n_vars != n or dag.max_lag != k:
                violations.append(f"regime {ri}: N/K differ from regime 0")
            _check_graph(dag, f"regime {ri}", violations)
        for ri, (dag, mechs) in enumerate(zip(tscm.graphs, tscm.mechanisms)):
            _check_mechanisms(dag, mechs, f"regime {ri}", violations)
        if tscm.transition.shape != (r, r):
            violations.append(f"transition shape {tscm.transition.shape} != {(r, r)}")
        else:
            sums = tscm.transition.sum(axis=1)
            for ri, s in enumerate(sums):
                if abs(s - 1.0) > ROW_SUM_TOL:
                    violations.append(f"transition row {ri} sums to {s!r}, not 1")
            if (tscm.transition < 0).any():
                violations.append("transition matrix has negative entries")
        if len(tscm.noise) != n:
            violations.append(f"{len(tscm.noise)} noise specs for {n} variables")
    else:
        _check_graph(tscm.graph, "graph", violations)
        _check_mechanisms(tscm.graph, tscm.mechanisms, "graph", violations)
        if len(tscm.noise) != tscm.n_vars:
            violations.append(f"{len(tscm.noise)} noise specs for {tscm.n_vars} variables")
    return Verdict(ok=not violations, violations=violations)


def unrolled_parents(
    tscm: AnyTscm,
    var: int,
    t: int,
    regime_path: Optional[np.ndarray] = None,
) -> set[tuple[int, int]]:
    """Parents of cell ``(var, t)`` in the unrolled graph, as ``(var, time)`` pairs.

    Lagged parents falling before t=0 are dropped.  Regime-switching TSCMs
    need the realized ``regime_path`` to know which graph is active at ``t``.
    """
    if isinstance(tscm, RegimeSwitchingTscm):
        if regime_path is None:
            raise InputError("regime_path required for a regime-switching TSCM")
        dag = tscm.graphs[int(regime_path[t])]
    else:
        dag = tscm.graph
    if not 0 <= var < dag.n_vars:
        raise InputError(f"variable index {var} out of range [0, {dag.n_vars})")
    if t < 0:
        raise InputError(f"time {t} out of range")
    out = set()
    for j, k in dag.parents_of(var):
        if t - k >= 0:
            out.add((j, t - k))
    return out
