"""Forward simulation of observational and interventional series.

The same noise matrix is meant to be passed to both members of a paired
obs/int simulation (counterfactual coupling): with shared noise every cell
that is not causally downstream of the intervention is bit-identical across
the pair, which is what makes the generator testable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ctpr import _kernels
from ctpr.errors import InputError
from ctpr.scm_core import (
    AnyTscm,
    InterventionSpec,
    Mechanism,
    RegimeSwitchingTscm,
    Series,
)

DEFAULT_CLIP_BOUND = 1e3


@dataclass(frozen=True)
class Ar1Coefficients:
    """Drift constant, autoregressive coefficient and noise scale of an AR(1)."""

    c1: float
    c2: float
    c3: float

    def __post_init__(self):
        if self.c3 < 0:
            raise InputError("noise scale c3 must be nonnegative")


class SimPlan:
    """Flat-array view of a TSCM consumed by the simulation kernels."""

    __slots__ = ("n_vars", "max_lag", "n_regimes", "topo", "parent_ptr",
                 "parent_var", "parent_lag", "parent_w", "parent_act",
                 "bias", "adjacency")

    def __init__(self, tscm: AnyTscm):
        if isinstance(tscm, RegimeSwitchingTscm):
            graphs = tscm.graphs
            mech_sets = tscm.mechanisms
        else:
            graphs = (tscm.graph,)
            mech_sets = (tscm.mechanisms,)
        n = graphs[0].n_vars
        k = graphs[0].max_lag
        r = len(graphs)
        self.n_vars = n
        self.max_lag = k
        self.n_regimes = r
        self.topo = np.stack([g.topo_order for g in graphs]).astype(np.int64)
        self.adjacency = np.stack([g.adjacency for g in graphs]).astype(np.uint8)
        self.bias = np.zeros((r, n), dtype=np.float64)
        ptr = np.zeros(r * n + 1, dtype=np.int64)
        pv, pl, pw, pa = [], [], [], []
        row = 0
        for ri, mechs in enumerate(mech_sets):
            for i in range(n):
                mech: Mechanism = mechs[i]
                self.bias[ri, i] = mech.bias
                for (j, lag), w, a in zip(mech.parents, mech.weights, mech.activations):
                    pv.append(j)
                    pl.append(lag)
                    pw.append(w)
                    pa.append(a)
                row += 1
                ptr[row] = len(pv)
        self.parent_ptr = ptr
        self.parent_var = np.asarray(pv, dtype=np.int64)
        self.parent_lag = np.asarray(pl, dtype=np.int64)
        self.parent_w = np.asarray(pw, dtype=np.float64)
        self.parent_act = np.asarray(pa, dtype=np.int64)


def draw_noise(tscm: AnyTscm, T: int, rng: np.random.Generator) -> np.ndarray:
    """Draw a (T, N) noise matrix, column i from the TSCM's i-th noise spec."""
    if T < 1:
        raise InputError(f"series length must be >= 1, got {T}")
    n = tscm.n_vars
    out = np.empty((T, n), dtype=np.float64)
    for i, spec in enumerate(tscm.noise):
        if spec.family == "gaussian":
            out[:, i] = rng.normal(0.0, spec.scale, size=T)
        elif spec.family == "uniform":
            out[:, i] = rng.uniform(-spec.scale, spec.scale, size=T)
        else:
            out[:, i] = rng.laplace(0.0, spec.scale, size=T)
    return out


def simulate_regime_chain(transition: np.ndarray, T: int, rng: np.random.Generator) -> np.ndarray:
    """Sample a length-T Markov path; the initial regime is uniform."""
    transition = np.asarray(transition, dtype=np.float64)
    if transition.ndim != 2 or transition.shape[0] != transition.shape[1]:
        raise InputError(f"transition matrix must be square, got shape {transition.shape}")
    if (transition < 0).any() or np.abs(transition.sum(axis=1) - 1.0).max() > 1e-9:
        raise InputError("transition matrix rows must be nonnegative and sum to 1")
    r = transition.shape[0]
    path = np.empty(T, dtype=np.int64)
    state = int(rng.integers(r))
    path[0] = state
    for t in range(1, T):
        state = int(rng.choice(r, p=transition[state]))
        path[t] = state
    return path


def _regime_path_for(tscm: AnyTscm, T: int, regime_path: Optional[np.ndarray]) -> np.ndarray:
    if isinstance(tscm, RegimeSwitchingTscm):
        if regime_path is None:
            raise InputError("regime_path required for a regime-switching TSCM")
        regime_path = np.asarray(regime_path, dtype=np.int64)
        if regime_path.shape != (T,):
            raise InputError(f"regime_path length {regime_path.shape} != ({T},)")
        if regime_path.min() < 0 or regime_path.max() >= tscm.n_regimes:
            raise InputError("regime_path indexes a nonexistent regime")
        return regime_path
    if regime_path is not None:
        raise InputError("regime_path given for a non-regime-switching TSCM")
    return np.zeros(T, dtype=np.int64)


def _run(tscm, T, noise, regime_path, mode, clamp_vals, shift_vals, clip_bound) -> np.ndarray:
    noise = np.asarray(noise, dtype=np.float64)
    if noise.shape != (T, tscm.n_vars):
        raise InputError(f"noise shape {noise.shape} != {(T, tscm.n_vars)}")
    plan = SimPlan(tscm)
    values = np.zeros((T, tscm.n_vars), dtype=np.float64)
    _kernels._forward(
        values, plan.topo, plan.parent_ptr, plan.parent_var, plan.parent_lag,
        plan.parent_w, plan.parent_act, plan.bias, noise, regime_path,
        mode, clamp_vals, shift_vals, float(clip_bound),
    )
    return values


def simulate_observational(
    tscm: AnyTscm,
    T: int,
    noise: np.ndarray,
    regime_path: Optional[np.ndarray] = None,
    clip_bound: float = DEFAULT_CLIP_BOUND,
) -> Series:
    """Forward-simulate the TSCM with no intervention.

    Within each time step variables are evaluated in the active regime's
    topological order; every written value is clipped to ±clip_bound after
    noise is added.
    """
    path = _regime_path_for(tscm, T, regime_path)
    n = tscm.n_vars
    mode = np.zeros((T, n), dtype=np.uint8)
    zeros = np.zeros((T, n), dtype=np.float64)
    values = _run(tscm, T, noise, path, mode, zeros, zeros, clip_bound)
    return Series(values=values, regime_path=regime_path if isinstance(tscm, RegimeSwitchingTscm) else None)


def intervention_masks(spec: InterventionSpec, T: int, n_vars: int):
    """Expand a spec into per-cell (mode, clamp, shift) arrays for the kernel."""
    mode = np.zeros((T, n_vars), dtype=np.uint8)
    clamp_vals = np.zeros((T, n_vars), dtype=np.float64)
    shift_vals = np.zeros((T, n_vars), dtype=np.float64)
    for t in spec.times:
        if not 0 <= t < T:
            raise InputError(f"intervention time {t} outside [0, {T})")
    if spec.kind == "hard":
        for i in spec.targets:
            for t in spec.times:
                mode[t, i] = _kernels.MODE_CLAMP
                clamp_vals[t, i] = spec.value
    elif spec.kind == "soft":
        for i, delta in zip(spec.targets, spec.shift):
            for t in spec.times:
                mode[t, i] = _kernels.MODE_SHIFT
                shift_vals[t, i] = delta
    else:  # time_varying
        for i in spec.targets:
            for t, c in zip(spec.times, spec.profile.trajectory):
                mode[t, i] = _kernels.MODE_CLAMP
                clamp_vals[t, i] = c
    return mode, clamp_vals, shift_vals


def simulate_interventional(
    tscm: AnyTscm,
    T: int,
    spec: InterventionSpec,
    noise: np.ndarray,
    regime_path: Optional[np.ndarray] = None,
    clip_bound: float = DEFAULT_CLIP_BOUND,
) -> Series:
    """Forward-simulate under do(): hard/time-varying cells are assigned their
    clamp value verbatim (no noise, no clipping); soft cells keep their parents
    and get the shift added before clipping.  Pass the observational run's
    noise (and regime path) to obtain the counterfactually coupled pair.
    """
    path = _regime_path_for(tscm, T, regime_path)
    for i in spec.targets:
        if not 0 <= i < tscm.n_vars:
            raise InputError(f"intervention target {i} out of range [0, {tscm.n_vars})")
    mode, clamp_vals, shift_vals = intervention_masks(spec, T, tscm.n_vars)
    values = _run(tscm, T, noise, path, mode, clamp_vals, shift_vals, clip_bound)
    return Series(values=values, regime_path=regime_path if isinstance(tscm, RegimeSwitchingTscm) else None)


def ou_ar1_coefficients(theta: float, mu: float, sigma_w: float, dt: float) -> Ar1Coefficients:
    """Euler-Maruyama coefficients of a mean-reverting OU step of size dt.

    x_{t+1} = c2 * x_t + c1 + c3 * Z_t with c1 = theta*mu*dt,
    c2 = 1 - theta*dt, c3 = sigma_w*sqrt(dt).
    """
    if theta <= 0:
        raise InputError(f"theta must be positive, got {theta}")
    if dt <= 0:
        raise InputError(f"dt must be positive, got {dt}")
    if sigma_w < 0:
        raise InputError(f"sigma_w must be nonnegative, got {sigma_w}")
    return Ar1Coefficients(c1=theta * mu * dt, c2=1.0 - theta * dt, c3=sigma_w * float(np.sqrt(dt)))
