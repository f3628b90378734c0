import numpy as np
import pytest

from conftest import build_tscm, chain_tscm
from ctpr.analysis import reachability_table
from ctpr.errors import InputError
from ctpr.prior import PriorConfig, sample_intervention, sample_tscm
from ctpr.scm_core import InterventionSpec, NoiseSpec, Profile, RegimeSwitchingTscm, Tscm
from ctpr.simulate import (
    draw_noise,
    ou_ar1_coefficients,
    simulate_interventional,
    simulate_observational,
    simulate_regime_chain,
)


def test_draw_noise_gaussian_variance():
    tscm = build_tscm(5, 1, [], noise_family="gaussian", noise_scale=1.0)
    noise = draw_noise(tscm, 10_000, np.random.default_rng(0))
    assert abs(noise.var() - 1.0) < 0.05


def test_draw_noise_uniform_support():
    tscm = build_tscm(5, 1, [], noise_family="uniform", noise_scale=0.5)
    noise = draw_noise(tscm, 10_000, np.random.default_rng(1))
    assert noise.min() >= -0.5 and noise.max() <= 0.5


def test_draw_noise_laplace_mean_abs():
    # E|X| = b for Laplace(0, b)
    tscm = build_tscm(5, 1, [], noise_family="laplace", noise_scale=1.0)
    noise = draw_noise(tscm, 10_000, np.random.default_rng(2))
    assert abs(np.abs(noise).mean() - 1.0) < 0.05


def test_draw_noise_bad_length():
    with pytest.raises(InputError):
        draw_noise(chain_tscm(2), 0, np.random.default_rng(0))


def test_regime_chain_identity_is_constant():
    path = simulate_regime_chain(np.eye(3), 100, np.random.default_rng(0))
    assert (path == path[0]).all()


def test_regime_chain_sticky_self_transition():
    m = np.array([[0.9, 0.1], [0.1, 0.9]])
    path = simulate_regime_chain(m, 10_000, np.random.default_rng(3))
    stays = np.mean(path[1:] == path[:-1])
    assert abs(stays - 0.9) < 0.01


def test_regime_chain_symmetric_occupancy():
    m = np.array([[0.5, 0.5], [0.5, 0.5]])
    path = simulate_regime_chain(m, 10_000, np.random.default_rng(4))
    assert abs(np.mean(path == 0) - 0.5) < 0.02


def test_regime_chain_rejects_non_stochastic():
    with pytest.raises(InputError):
        simulate_regime_chain(np.array([[0.5, 0.4], [0.5, 0.5]]), 10, np.random.default_rng(0))


def test_zero_mechanism_equals_clipped_noise():
    tscm = build_tscm(4, 2, [(0, 1, 0), (1, 2, 1)], weight=0.0, bias=0.0,
                      noise_family="uniform", noise_scale=0.5)
    noise = draw_noise(tscm, 200, np.random.default_rng(5))
    series = simulate_observational(tscm, 200, noise, clip_bound=0.3)
    assert np.array_equal(series.values, np.clip(noise, -0.3, 0.3))


def test_chain_copy_dynamics():
    tscm = chain_tscm(2, weight=1.0)
    T = 40
    noise = np.zeros((T, 2))
    noise[:, 0] = np.random.default_rng(6).normal(size=T)
    series = simulate_observational(tscm, T, noise)
    assert series.values[0, 1] == 0.0
    assert np.array_equal(series.values[1:, 1], series.values[:-1, 0])


def test_clipping_engages():
    tscm = chain_tscm(2, weight=1.0)
    T = 10
    noise = np.zeros((T, 2))
    noise[:, 0] = 100.0
    series = simulate_observational(tscm, T, noise, clip_bound=5.0)
    assert (series.values[:, 0] == 5.0).all()


def test_simulation_determinism():
    cfg = PriorConfig()
    tscm = sample_tscm(cfg, np.random.default_rng(8))
    while isinstance(tscm, RegimeSwitchingTscm):
        tscm = sample_tscm(cfg, np.random.default_rng(9))
    noise = draw_noise(tscm, 50, np.random.default_rng(10))
    a = simulate_observational(tscm, 50, noise)
    b = simulate_observational(tscm, 50, noise)
    assert np.array_equal(a.values, b.values)


def test_noise_shape_mismatch():
    tscm = chain_tscm(3)
    with pytest.raises(InputError):
        simulate_observational(tscm, 50, np.zeros((50, 2)))


def test_regime_path_required():
    cfg = PriorConfig(family_mix=(0.0, 0.0, 1.0))
    tscm = sample_tscm(cfg, np.random.default_rng(0))
    noise = draw_noise(tscm, 50, np.random.default_rng(1))
    with pytest.raises(InputError):
        simulate_observational(tscm, 50, noise)


def test_hard_intervention_exactness():
    tscm = build_tscm(5, 1, [(0, 4, 0), (3, 4, 1)], noise_scale=1.0)
    T = 50
    noise = draw_noise(tscm, T, np.random.default_rng(11))
    spec = InterventionSpec(targets=(4,), times=tuple(range(20, 31)), kind="hard", value=3.0)
    intr = simulate_interventional(tscm, T, spec, noise)
    for t in range(20, 31):
        assert intr.values[t, 4] == 3.0
    # clamp values bypass clipping
    spec_big = InterventionSpec(targets=(4,), times=(20,), kind="hard", value=1e9)
    intr = simulate_interventional(tscm, T, spec_big, noise, clip_bound=1e4)
    assert intr.values[20, 4] == 1e9


def test_soft_intervention_adds_shift():
    tscm = build_tscm(2, 1, [], weight=0.0, bias=0.25)
    T = 30
    noise = np.zeros((T, 2))
    spec = InterventionSpec(targets=(1,), times=(10, 11, 12), kind="soft", shift=(2.0,))
    obs = simulate_observational(tscm, T, noise)
    intr = simulate_interventional(tscm, T, spec, noise)
    for t in (10, 11, 12):
        assert intr.values[t, 1] == obs.values[t, 1] + 2.0
    assert np.array_equal(np.delete(intr.values, [10, 11, 12], axis=0),
                          np.delete(obs.values, [10, 11, 12], axis=0))


def test_time_varying_clamp():
    tscm = chain_tscm(3)
    T = 30
    noise = draw_noise(tscm, T, np.random.default_rng(12))
    traj = (1.0, -2.0, 0.5)
    spec = InterventionSpec(targets=(0,), times=(10, 11, 12), kind="time_varying",
                            profile=Profile(kind="sampled", params=(), trajectory=traj))
    intr = simulate_interventional(tscm, T, spec, noise)
    for t, c in zip((10, 11, 12), traj):
        assert intr.values[t, 0] == c


def test_intervention_time_out_of_range():
    tscm = chain_tscm(2)
    noise = np.zeros((10, 2))
    spec = InterventionSpec(targets=(0,), times=(12,), kind="hard", value=1.0)
    with pytest.raises(InputError):
        simulate_interventional(tscm, 10, spec, noise)


def test_no_path_means_zero_difference():
    # 3 variables, x0 -> x1 -> x2 at lag 1: nothing reaches x0 from x2
    tscm = chain_tscm(3)
    T = 50
    noise = draw_noise(tscm, T, np.random.default_rng(13))
    spec = InterventionSpec(targets=(2,), times=tuple(range(25, 30)), kind="hard", value=4.0)
    obs = simulate_observational(tscm, T, noise)
    intr = simulate_interventional(tscm, T, spec, noise)
    assert abs(intr.values[28, 0] - obs.values[28, 0]) == 0.0
    assert np.array_equal(intr.values[:, 0], obs.values[:, 0])
    assert np.array_equal(intr.values[:, 1], obs.values[:, 1])


def test_shared_noise_invariance_fuzz():
    # cells outside the reachable closure are bit-identical across the pair
    cfg = PriorConfig()
    for seed in range(60):
        rng = np.random.default_rng(seed)
        tscm = sample_tscm(cfg, rng)
        spec = sample_intervention(tscm, cfg, rng)
        T = cfg.seq_len
        regime_path = None
        if isinstance(tscm, RegimeSwitchingTscm):
            regime_path = simulate_regime_chain(tscm.transition, T, rng)
        noise = draw_noise(tscm, T, rng)
        obs = simulate_observational(tscm, T, noise, regime_path)
        intr = simulate_interventional(tscm, T, spec, noise, regime_path)
        reach = reachability_table(tscm, spec, T, regime_path)
        outside = ~reach
        assert np.array_equal(obs.values[outside], intr.values[outside])


def test_no_nan_inf_fuzz():
    cfg = PriorConfig()
    for seed in range(200):
        rng = np.random.default_rng(seed)
        tscm = sample_tscm(cfg, rng)
        T = cfg.seq_len
        regime_path = None
        if isinstance(tscm, RegimeSwitchingTscm):
            regime_path = simulate_regime_chain(tscm.transition, T, rng)
        noise = draw_noise(tscm, T, rng)
        series = simulate_observational(tscm, T, noise, regime_path)
        assert np.isfinite(series.values).all()


def test_ou_ar1_plugin_values():
    c = ou_ar1_coefficients(1.0, 0.0, 1.0, 1.0)
    assert (c.c1, c.c2, c.c3) == (0.0, 0.0, 1.0)
    c = ou_ar1_coefficients(0.5, 2.0, 1.0, 0.01)
    assert (c.c1, c.c2, c.c3) == (0.01, 0.995, 0.1)


def test_ou_ar1_rejects_bad_inputs():
    with pytest.raises(InputError):
        ou_ar1_coefficients(0.0, 0.0, 1.0, 0.1)
    with pytest.raises(InputError):
        ou_ar1_coefficients(1.0, 0.0, 1.0, 0.0)
    with pytest.raises(InputError):
        ou_ar1_coefficients(1.0, 0.0, -1.0, 0.1)


def test_ar1_stationary_variance_matches_ou():
    theta, sigma_w, dt = 0.5, 1.0, 0.01
    c = ou_ar1_coefficients(theta, 0.0, sigma_w, dt)
    rng = np.random.default_rng(1)
    n = 100_000
    x = np.empty(n)
    x[0] = 0.0
    z = rng.normal(size=n)
    for t in range(1, n):
        x[t] = c.c2 * x[t - 1] + c.c1 + c.c3 * z[t]
    target = sigma_w**2 / (2 * theta)
    assert abs(x.var() - target) / target < 0.05
    # discrete-time stationary variance of the AR(1) itself
    ar_var = c.c3**2 / (1 - c.c2**2)
    assert abs(x.var() - ar_var) / ar_var < 0.05


def test_burn_in_slicing():
    from ctpr.dataset import generate_sample

    cfg = PriorConfig(burn_in=20)
    sample = generate_sample(cfg, 5)
    assert sample.obs.seq_len == cfg.seq_len
    assert sample.int.seq_len == cfg.seq_len
    if sample.obs.regime_path is not None:
        assert len(sample.obs.regime_path) == cfg.seq_len
