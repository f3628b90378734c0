"""Configurable prior over TSCMs, regime-switching TSCMs and interventions.

Every sampler is a pure function of (config, rng state): identical seeds give
bit-identical objects, which the corpus pipeline relies on for deterministic
parallel generation and record regeneration.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, fields, replace
from typing import Optional

import numpy as np

from ctpr.errors import ConfigError, InputError
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
    RegimeSwitchingTscm,
    Tscm,
)

_MIX_TOL = 1e-9


@dataclass(frozen=True)
class PriorConfig:
    """All knobs of the sampling prior.

    ``family_mix`` orders (diverse_nonlinear, chain, regime_switching);
    ``intervention_mix`` orders (hard, soft, time_varying).  Noise scales are
    drawn log-uniformly from [noise_scale_min, noise_scale_max].
    ``edge_prob_fixed`` collapses the Beta edge-probability draw to a constant
    (degenerate prior, mostly for tests); ``edge_prob_floor`` lower-bounds it.
    """

    n_min: int = 3
    n_max: int = 10
    k_min: int = 1
    k_max: int = 3
    edge_alpha: float = 2.0
    edge_beta: float = 5.0
    edge_prob_floor: float = 0.0
    edge_prob_fixed: Optional[float] = None
    lag_decay: float = 0.7
    weight_std: float = 1.0
    weight_fan_in_norm: bool = True
    bias_std: float = 0.5
    activation_set: tuple[str, ...] = ACTIVATIONS
    noise_scale_min: float = 0.1
    noise_scale_max: float = 1.0
    family_mix: tuple[float, float, float] = (0.70, 0.15, 0.15)
    intervention_mix: tuple[float, float, float] = (0.50, 0.30, 0.20)
    hard_value_std: float = 2.0
    soft_shift_mean: float = 0.0
    soft_shift_std: float = 2.0
    regime_count_choices: tuple[int, ...] = (2, 3)
    sticky_diag: float = 0.9
    clip_bound: float = 1e3
    seq_len: int = 50
    burn_in: int = 0
    resample_noise: bool = False

    def __post_init__(self):
        if not 3 <= self.n_min <= self.n_max:
            raise ConfigError(f"need 3 <= n_min <= n_max, got ({self.n_min}, {self.n_max})")
        if not 1 <= self.k_min <= self.k_max:
            raise ConfigError(f"need 1 <= k_min <= k_max, got ({self.k_min}, {self.k_max})")
        if not 0 < self.lag_decay <= 1:
            raise ConfigError(f"lag_decay must lie in (0, 1], got {self.lag_decay}")
        for name, mix in (("family_mix", self.family_mix), ("intervention_mix", self.intervention_mix)):
            if len(mix) != 3 or any(p < 0 for p in mix) or abs(sum(mix) - 1.0) > _MIX_TOL:
                raise ConfigError(f"{name} must be 3 nonnegative proportions summing to 1, got {mix}")
        for a in self.activation_set:
            if a not in ACTIVATIONS:
                raise ConfigError(f"unknown activation {a!r}")
        if not self.activation_set:
            raise ConfigError("activation_set must be nonempty")
        if not 0 < self.noise_scale_min <= self.noise_scale_max:
            raise ConfigError("need 0 < noise_scale_min <= noise_scale_max")
        if any(r < 2 for r in self.regime_count_choices):
            raise ConfigError("regime counts must be >= 2")
        if not 0 < self.sticky_diag <= 1:
            raise ConfigError(f"sticky_diag must lie in (0, 1], got {self.sticky_diag}")
        if self.clip_bound <= 0:
            raise ConfigError("clip_bound must be positive")
        if self.seq_len < 1:
            raise ConfigError("seq_len must be >= 1")
        if self.burn_in < 0:
            raise ConfigError("burn_in must be >= 0")
        if self.edge_prob_fixed is not None and not 0 <= self.edge_prob_fixed <= 1:
            raise ConfigError("edge_prob_fixed must lie in [0, 1]")
        if not 0 <= self.edge_prob_floor <= 1:
            raise ConfigError("edge_prob_floor must lie in [0, 1]")

    # -- plain-text key=value config files ---------------------------------

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ",".join(str(x) for x in v)
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "PriorConfig":
        known = {f.name: f for f in fields(cls)}
        kwargs = {}
        for ln, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {ln}: expected 'key = value', got {raw!r}")
            key, val = (s.strip() for s in line.split("=", 1))
            if key not in known:
                raise ConfigError(f"line {ln}: unknown config key {key!r}")
            kwargs[key] = _parse_value(key, val)
        return cls(**kwargs)

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_text())

    @classmethod
    def load(cls, path) -> "PriorConfig":
        with open(path) as fh:
            return cls.from_text(fh.read())

    def digest(self) -> bytes:
        """SHA-256 of the canonical text form; stored in corpus headers."""
        return hashlib.sha256(self.to_text().encode()).digest()


_INT_FIELDS = {"n_min", "n_max", "k_min", "k_max", "seq_len", "burn_in"}
_TUPLE_FLOAT_FIELDS = {"family_mix", "intervention_mix"}
_TUPLE_INT_FIELDS = {"regime_count_choices"}
_TUPLE_STR_FIELDS = {"activation_set"}
_BOOL_FIELDS = {"resample_noise", "weight_fan_in_norm"}
_OPT_FLOAT_FIELDS = {"edge_prob_fixed"}


def _parse_value(key: str, val: str):
    try:
        if key in _INT_FIELDS:
            return int(val)
        if key in _BOOL_FIELDS:
            return val.lower() in ("1", "true", "yes", "on")
        if key in _TUPLE_FLOAT_FIELDS:
            return tuple(float(x) for x in val.split(","))
        if key in _TUPLE_INT_FIELDS:
            return tuple(int(x) for x in val.split(","))
        if key in _TUPLE_STR_FIELDS:
            return tuple(x.strip() for x in val.split(","))
        if key in _OPT_FLOAT_FIELDS:
            return None if val.lower() == "none" else float(val)
        return float(val)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key!r}: {val!r}") from exc


def ood_config(base: Optional[PriorConfig] = None) -> PriorConfig:
    """Out-of-distribution preset: larger and denser graphs, max lag pinned
    to 3, and only the four strongly nonlinear activations."""
    base = base or PriorConfig()
    return replace(
        base,
        n_min=8,
        n_max=10,
        k_min=3,
        k_max=3,
        edge_prob_floor=0.3,
        activation_set=("sin", "cos", "square", "tanh"),
        family_mix=(1.0, 0.0, 0.0),
    )


# -- samplers ---------------------------------------------------------------


def _draw_edge_prob(cfg: PriorConfig, rng: np.random.Generator) -> float:
    if cfg.edge_prob_fixed is not None:
        return cfg.edge_prob_fixed
    p = float(rng.beta(cfg.edge_alpha, cfg.edge_beta))
    return max(p, cfg.edge_prob_floor)


def _sample_dag(cfg: PriorConfig, rng: np.random.Generator, n: int, k: int) -> LaggedDag:
    p = _draw_edge_prob(cfg, rng)
    order = rng.permutation(n).astype(np.int64)
    adjacency = np.zeros((k + 1, n, n), dtype=np.uint8)
    # instantaneous edges only from earlier to later in the sampled order
    for a in range(n):
        for b in range(a + 1, n):
            if rng.random() < p:
                adjacency[0, order[a], order[b]] = 1
    for lag in range(1, k + 1):
        p_k = p * cfg.lag_decay**lag
        adjacency[lag] = (rng.random((n, n)) < p_k).astype(np.uint8)
    return LaggedDag(n_vars=n, max_lag=k, adjacency=adjacency, topo_order=order, edge_prob=p)


def sample_graph(cfg: PriorConfig, rng: np.random.Generator) -> LaggedDag:
    """Sample N, K, the edge probability p and the time-lagged DAG.

    Instantaneous edges form an Erdos-Renyi DAG under a uniformly random
    topological order; lag-k edges appear independently with probability
    p * lag_decay**k.
    """
    n = int(rng.integers(cfg.n_min, cfg.n_max + 1))
    k = int(rng.integers(cfg.k_min, cfg.k_max + 1))
    return _sample_dag(cfg, rng, n, k)


def sample_mechanism(
    parents: tuple[tuple[int, int], ...], cfg: PriorConfig, rng: np.random.Generator
) -> Mechanism:
    """Draw weights ~ N(0, weight_std^2), bias ~ N(0, bias_std^2) and a uniform
    activation per parent slot.

    With ``weight_fan_in_norm`` (the default) the drawn weight vector is
    scaled by 1/sqrt(n_parents) so the summed parent term keeps an O(weight_std)
    scale regardless of fan-in; without it high-fan-in mechanisms amplify
    until almost every trajectory saturates at the clip bound.
    """
    n_par = len(parents)
    raw = rng.normal(0.0, cfg.weight_std, size=n_par)
    if cfg.weight_fan_in_norm and n_par:
        raw = raw / np.sqrt(n_par)
    weights = tuple(float(w) for w in raw)
    bias = float(rng.normal(0.0, cfg.bias_std))
    allowed = [ACTIVATIONS.index(a) for a in cfg.activation_set]
    acts = tuple(int(allowed[i]) for i in rng.integers(0, len(allowed), size=n_par))
    return Mechanism(parents=tuple(parents), weights=weights, bias=bias, activations=acts)


def sample_noise(cfg: PriorConfig, rng: np.random.Generator) -> NoiseSpec:
    """Uniform family choice; scale drawn log-uniformly."""
    family = NOISE_FAMILIES[int(rng.integers(0, len(NOISE_FAMILIES)))]
    lo, hi = np.log(cfg.noise_scale_min), np.log(cfg.noise_scale_max)
    scale = float(np.exp(rng.uniform(lo, hi)))
    return NoiseSpec(family=family, scale=scale)


def _mechanisms_for(dag: LaggedDag, cfg: PriorConfig, rng: np.random.Generator) -> tuple[Mechanism, ...]:
    return tuple(sample_mechanism(dag.parents_of(i), cfg, rng) for i in range(dag.n_vars))


def _chain_dag(n: int) -> LaggedDag:
    adjacency = np.zeros((2, n, n), dtype=np.uint8)
    for i in range(1, n):
        adjacency[1, i - 1, i] = 1
    return LaggedDag(n_vars=n, max_lag=1, adjacency=adjacency, topo_order=np.arange(n, dtype=np.int64))


def sticky_transition(n_regimes: int, diag: float) -> np.ndarray:
    """Row-stochastic matrix with ``diag`` self-transition and the rest split evenly."""
    off = (1.0 - diag) / (n_regimes - 1) if n_regimes > 1 else 0.0
    m = np.full((n_regimes, n_regimes), off, dtype=np.float64)
    np.fill_diagonal(m, diag)
    return m


def sample_tscm(cfg: PriorConfig, rng: np.random.Generator) -> AnyTscm:
    """Draw a TSCM from the family mix.

    chain builds the lag-1 path X0 -> X1 -> ... -> X_{N-1} with sampled
    mechanisms; regime_switching shares N/K/noise across regimes but samples
    each regime's graph (own edge probability and topological order) and
    mechanisms independently.
    """
    family = FAMILIES[int(rng.choice(len(FAMILIES), p=cfg.family_mix))]
    if family == "chain":
        n = int(rng.integers(cfg.n_min, cfg.n_max + 1))
        dag = _chain_dag(n)
        mechs = _mechanisms_for(dag, cfg, rng)
        noise = tuple(sample_noise(cfg, rng) for _ in range(n))
        return Tscm(graph=dag, mechanisms=mechs, noise=noise, family_tag="chain")
    if family == "regime_switching":
        n = int(rng.integers(cfg.n_min, cfg.n_max + 1))
        k = int(rng.integers(cfg.k_min, cfg.k_max + 1))
        r = int(rng.choice(np.asarray(cfg.regime_count_choices)))
        graphs, mech_sets = [], []
        for _ in range(r):
            dag = _sample_dag(cfg, rng, n, k)
            graphs.append(dag)
            mech_sets.append(_mechanisms_for(dag, cfg, rng))
        noise = tuple(sample_noise(cfg, rng) for _ in range(n))
        return RegimeSwitchingTscm(
            graphs=tuple(graphs),
            mechanisms=tuple(mech_sets),
            noise=noise,
            transition=sticky_transition(r, cfg.sticky_diag),
        )
    dag = sample_graph(cfg, rng)
    mechs = _mechanisms_for(dag, cfg, rng)
    noise = tuple(sample_noise(cfg, rng) for _ in range(dag.n_vars))
    return Tscm(graph=dag, mechanisms=mechs, noise=noise, family_tag="diverse_nonlinear")


def _sample_profile(cfg: PriorConfig, times: tuple[int, ...], rng: np.random.Generator) -> Profile:
    kind = PROFILE_KINDS[int(rng.integers(0, len(PROFILE_KINDS)))]
    length = len(times)
    std = cfg.hard_value_std
    if kind == "step":
        c = float(rng.normal(0.0, std))
        return Profile(kind=kind, params=(c,), trajectory=(c,) * length)
    if kind == "ramp":
        c0 = float(rng.normal(0.0, std))
        c1 = float(rng.normal(0.0, std))
        if length == 1:
            traj = (c0,)
        else:
            traj = tuple(c0 + (c1 - c0) * idx / (length - 1) for idx in range(length))
        return Profile(kind=kind, params=(c0, c1), trajectory=traj)
    if kind == "sinusoidal":
        amp = float(rng.normal(0.0, std))
        period = float(rng.integers(5, 21))
        t0 = times[0]
        traj = tuple(amp * float(np.sin(2.0 * np.pi * (t - t0) / period)) for t in times)
        return Profile(kind=kind, params=(amp, period), trajectory=traj)
    traj = tuple(float(v) for v in rng.normal(0.0, std, size=length))
    return Profile(kind="sampled", params=(), trajectory=traj)


def sample_intervention(tscm: AnyTscm, cfg: PriorConfig, rng: np.random.Generator) -> InterventionSpec:
    """Sample an intervention spec with 1-2 targets over a contiguous window
    starting in the second half of the sequence (duration >= 3)."""
    T = cfg.seq_len
    if T < 10:
        raise ConfigError(f"seq_len {T} leaves no room for a second-half intervention")
    n = tscm.n_vars
    kind = INTERVENTION_KINDS[int(rng.choice(len(INTERVENTION_KINDS), p=cfg.intervention_mix))]
    n_targets = int(rng.integers(1, min(2, n) + 1))
    targets = tuple(sorted(int(i) for i in rng.choice(n, size=n_targets, replace=False)))
    start = int(rng.integers(T // 2, T - 4))
    duration = int(rng.integers(3, T - start + 1))
    times = tuple(range(start, start + duration))
    if kind == "hard":
        return InterventionSpec(targets=targets, times=times, kind=kind,
                                value=float(rng.normal(0.0, cfg.hard_value_std)))
    if kind == "soft":
        shift = tuple(float(d) for d in rng.normal(cfg.soft_shift_mean, cfg.soft_shift_std, size=n_targets))
        return InterventionSpec(targets=targets, times=times, kind=kind, shift=shift)
    return InterventionSpec(targets=targets, times=times, kind=kind,
                            profile=_sample_profile(cfg, times, rng))
