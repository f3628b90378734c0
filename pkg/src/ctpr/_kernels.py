"""Hot numeric kernels: forward simulation and unrolled-graph reachability.

Every kernel is written as a plain scalar-loop Python function and wrapped
with ``numba.njit`` when available.  Setting ``CTPR_DISABLE_NUMBA=1`` in the
environment selects the pure NumPy/Python fallback path (same functions,
uncompiled), which is what ``benchmarks/bench_simulate.py`` compares against.
"""

import math
import os

import numpy as np


def _env_disabled() -> bool:
    return os.environ.get("CTPR_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")


try:
    from numba import njit as _njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False

USE_NUMBA = _HAVE_NUMBA and not _env_disabled()


def _jit(fn):
    return _njit(cache=True)(fn) if USE_NUMBA else fn


# Cell modes in the intervention mask.
MODE_FREE = 0
MODE_CLAMP = 1  # hard / time-varying: assigned verbatim, no noise, no clip
MODE_SHIFT = 2  # soft: mechanism + shift + noise, clipped like any other cell


def _activate(act, x):
    if act == 0:  # identity
        return x
    if act == 1:
        return math.sin(x)
    if act == 2:
        return math.cos(x)
    if act == 3:
        return math.tanh(x)
    if act == 4:
        return abs(x)
    if act == 5:
        return x * x
    return math.exp(-abs(x))  # exp_neg_abs


_activate = _jit(_activate)


def _forward(
    values,  # (T, N) float64 out
    topo,  # (R, N) int64
    parent_ptr,  # (R*N + 1,) int64, CSR over (regime, var)
    parent_var,  # (E,) int64
    parent_lag,  # (E,) int64
    parent_w,  # (E,) float64
    parent_act,  # (E,) int64
    bias,  # (R, N) float64
    noise,  # (T, N) float64
    regime_path,  # (T,) int64 (all zeros for a single-regime TSCM)
    mode,  # (T, N) uint8
    clamp_vals,  # (T, N) float64
    shift_vals,  # (T, N) float64
    clip_bound,  # float64
):
    T, N = values.shape
    for t in range(T):
        r = regime_path[t]
        for oi in range(N):
            i = topo[r, oi]
            m = mode[t, i]
            if m == 1:
                values[t, i] = clamp_vals[t, i]
                continue
            row = r * N + i
            acc = bias[r, i]
            for e in range(parent_ptr[row], parent_ptr[row + 1]):
                ts = t - parent_lag[e]
                if ts < 0:
                    continue
                acc += parent_w[e] * _activate(parent_act[e], values[ts, parent_var[e]])
            v = acc + noise[t, i]
            if m == 2:
                v += shift_vals[t, i]
            if v > clip_bound:
                v = clip_bound
            elif v < -clip_bound:
                v = -clip_bound
            values[t, i] = v


_forward = _jit(_forward)


def _reach(
    reached,  # (T, N) uint8, seeds pre-marked; filled in place
    adjacency,  # (R, K+1, N, N) uint8
    topo,  # (R, N) int64
    regime_path,  # (T,) int64
):
    T, N = reached.shape
    K = adjacency.shape[1] - 1
    for t in range(T):
        r = regime_path[t]
        # lagged edges into time t
        for i in range(N):
            if reached[t, i]:
                continue
            hit = False
            for k in range(1, K + 1):
                ts = t - k
                if ts < 0:
                    break
                for j in range(N):
                    if adjacency[r, k, j, i] and reached[ts, j]:
                        hit = True
                        break
                if hit:
                    break
            if hit:
                reached[t, i] = 1
        # instantaneous closure; one pass in topological order suffices
        for oi in range(N):
            i = topo[r, oi]
            if reached[t, i]:
                continue
            for j in range(N):
                if adjacency[r, 0, j, i] and reached[t, j]:
                    reached[t, i] = 1
                    break


_reach = _jit(_reach)


def warmup() -> None:
    """Trigger JIT compilation of all kernels on tiny inputs."""
    T, N = 2, 2
    values = np.zeros((T, N))
    topo = np.array([[0, 1]], dtype=np.int64)
    ptr = np.zeros(N + 1, dtype=np.int64)
    e = np.zeros(0, dtype=np.int64)
    w = np.zeros(0, dtype=np.float64)
    bias = np.zeros((1, N))
    noise = np.zeros((T, N))
    path = np.zeros(T, dtype=np.int64)
    mode = np.zeros((T, N), dtype=np.uint8)
    zeros = np.zeros((T, N))
    _forward(values, topo, ptr, e, e, w, e, bias, noise, path, mode, zeros, zeros, 1.0)
    reached = np.zeros((T, N), dtype=np.uint8)
    adj = np.zeros((1, 1, N, N), dtype=np.uint8)
    _reach(reached, adj, topo, path)
