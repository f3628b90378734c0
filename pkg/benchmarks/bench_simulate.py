"""Benchmark the JIT-compiled kernels against the pure NumPy/Python fallback.

The fallback path is selected with CTPR_DISABLE_NUMBA=1; this script runs
itself once per backend in a subprocess so both paths get a fresh import,
then reports per-sample timings for the full generation pipeline and for
the two hot kernels in isolation.

Usage: python benchmarks/bench_simulate.py [n_samples]
"""

import os
import subprocess
import sys
import time

N_DEFAULT = 500


def run_backend(n: int) -> None:
    import numpy as np

    from ctpr import _kernels
    from ctpr.analysis import reachability_table
    from ctpr.dataset import derive_sample_seeds, generate_sample
    from ctpr.prior import PriorConfig, sample_intervention, sample_tscm
    from ctpr.simulate import draw_noise, simulate_observational

    backend = "numba" if _kernels.USE_NUMBA else "numpy-fallback"
    cfg = PriorConfig()
    generate_sample(cfg, 0)  # warm: triggers JIT compilation on the numba path

    seeds = derive_sample_seeds(1, 0, n)
    t0 = time.perf_counter()
    checksum = 0.0
    for s in seeds:
        sample = generate_sample(cfg, int(s))
        checksum += float(sample.int.values[-1, 0])
    pipeline = time.perf_counter() - t0

    # hot kernels in isolation, on a fixed mid-size world
    rng = np.random.default_rng(123)
    tscm = sample_tscm(PriorConfig(n_min=8, n_max=8, k_min=3, k_max=3,
                                   family_mix=(1.0, 0.0, 0.0)), rng)
    spec = sample_intervention(tscm, cfg, rng)
    noise = draw_noise(tscm, cfg.seq_len, rng)
    reps = max(1, n * 4)
    t0 = time.perf_counter()
    for _ in range(reps):
        simulate_observational(tscm, cfg.seq_len, noise)
    sim = (time.perf_counter() - t0) / reps
    t0 = time.perf_counter()
    for _ in range(reps):
        reachability_table(tscm, spec, cfg.seq_len)
    reach = (time.perf_counter() - t0) / reps

    print(f"{backend:15s}  pipeline {1e3 * pipeline / n:8.3f} ms/sample "
          f"({n / pipeline:7.0f}/s)   forward_sim {1e6 * sim:8.1f} us   "
          f"reachability {1e6 * reach:8.1f} us   checksum {checksum:.6g}")


def main() -> None:
    n = int(sys.argv[1]) if len(sys.argv) > 1 else N_DEFAULT
    if os.environ.get("CTPR_BENCH_CHILD"):
        run_backend(n)
        return
    print(f"generation benchmark, {n} samples per backend")
    for disable in ("0", "1"):
        env = dict(os.environ, CTPR_BENCH_CHILD="1", CTPR_DISABLE_NUMBA=disable)
        subprocess.run([sys.executable, __file__, str(n)], env=env, check=True)


if __name__ == "__main__":
    main()
