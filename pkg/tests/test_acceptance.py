"""Acceptance suite: one test per criterion, each printing one PASS/FAIL line.

Run on its own with ``pytest tests/test_acceptance.py -v``.
"""

import json
import math
import time

import numpy as np
import pytest

from embedlab.chain import OrthoChain, build_functional_chain, build_orthogonal_chain, project
from embedlab.covering import assouad_estimate, dyadic_scale_grid
from embedlab.cube_slice import SliceQuery, section_density, slab_volume_exact, slab_volume_mc, verify_ball_bound
from embedlab.distortion import (
    failure_measure,
    fit_bilip_constants,
    gamma_threshold,
    profile,
    verify_almost_bilip,
)
from embedlab.fixtures import cantor_dust, decaying_orthogonal, grid, random_homogeneous
from embedlab.geometry import difference_set, dyadic_layers
from embedlab.harness import ExperimentConfig, run_experiment
from embedlab.probe import ProbeConfig, loglog_slope, mu_bound_mc, sample_probe_map

SQRT2 = math.sqrt(2.0)


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail, elapsed=None):
        took = f" [{elapsed:.1f}s]" if elapsed is not None else ""
        with capsys.disabled():
            print(f"\nCRITERION {number:>2}: {'PASS' if ok else 'FAIL'} - {detail}{took}")
        return ok

    return emit


def _chain_fixtures(norm):
    sets = [random_homogeneous(n=40, intrinsic_dim=1 + k % 3, D=8, seed=k) for k in range(10)]
    sets.append(decaying_orthogonal(12))
    return [X.with_norm(norm) for X in sets]


def _decaying(K, norm="l2"):
    X = decaying_orthogonal(K, norm)
    Z = difference_set(X)
    return X, Z, dyadic_layers(Z)


def test_criterion_01_ball_extremal_value(report):
    t0 = time.perf_counter()
    errors = {}
    for D in (2, 5, 12):
        a = np.zeros(D)
        a[:2] = 1 / SQRT2
        errors[D] = abs(section_density(a, 0.0) - SQRT2)
    q = SliceQuery(np.array([1 / SQRT2, 1 / SQRT2]), 0.0, 0.01)
    exact = slab_volume_exact(q).value
    mc = slab_volume_mc(q, 10**6, seed=2024)
    z = abs(mc.value - exact) / mc.stderr
    elapsed = time.perf_counter() - t0
    ok = max(errors.values()) <= 1e-9 and z <= 3 and elapsed < 10
    report(1, ok, f"max |density - sqrt2| = {max(errors.values()):.2e}; MC slab z = {z:.2f}", elapsed)
    assert ok


def test_criterion_02_ball_bound_sweep(report):
    t0 = time.perf_counter()
    worst = {}
    for D in (2, 5, 20, 50):
        rep = verify_ball_bound(D, 1000, seed=D)
        worst[D] = rep["max_central"]
    elapsed = time.perf_counter() - t0
    ok = all(v <= SQRT2 + 1e-6 for v in worst.values()) and elapsed < 120
    detail = ", ".join(f"D={D}: {v:.6f}" for D, v in worst.items())
    report(2, ok, f"max central density {detail} (bound {SQRT2:.6f})", elapsed)
    assert ok


def test_criterion_03_coordinate_hyperplane(report):
    dims = [1, 2, 3, 5, 8, 12, 13, 20, 50, 100]
    errs = []
    for D in dims:
        a = np.zeros(D)
        a[0] = 1.0
        errs.append(abs(section_density(a, 0.0) - 1.0))
    ok = max(errs) <= 1e-12
    report(3, ok, f"max |density(e_1) - 1| = {max(errs):.1e} over D in {dims}")
    assert ok


def test_criterion_04_orthogonal_chain_inequality(report):
    t0 = time.perf_counter()
    checked = failed = 0
    for X in _chain_fixtures("l2"):
        layers = dyadic_layers(difference_set(X))
        chain = build_orthogonal_chain(layers, check=False)
        for n in layers:
            Z = layers.layers[n]
            proj = np.linalg.norm(project(chain, n, Z), axis=1)
            checked += len(Z)
            failed += int(np.sum(proj < 2.0 ** -(n + 2)))
    elapsed = time.perf_counter() - t0
    ok = failed == 0 and elapsed < 30
    report(4, ok, f"|Pi_n z| >= 2^-(n+2) on {checked - failed}/{checked} layer points, 11 fixtures", elapsed)
    assert ok


def test_criterion_05_functional_chain_inequality(report):
    t0 = time.perf_counter()
    checked = failed = 0
    norms_ok = True
    for X in _chain_fixtures("linf"):
        layers = dyadic_layers(difference_set(X))
        chain = build_functional_chain(layers, check=False)
        for n in layers:
            M = chain.matrix(n)
            norms_ok &= bool(np.all(np.abs(M).sum(axis=1) == 1.0))
            vals = chain.best_value(n, layers.layers[n])
            checked += len(vals)
            failed += int(np.sum(vals < 2.0 ** -(n + 3)))
    elapsed = time.perf_counter() - t0
    ok = failed == 0 and norms_ok and elapsed < 30
    report(5, ok, f"dual norm 1: {norms_ok}; |psi(z)| >= 2^-(n+3) on {checked - failed}/{checked} points", elapsed)
    assert ok


def test_criterion_06_small_ball_scaling(report):
    t0 = time.perf_counter()
    chain = OrthoChain(bases={1: np.eye(1)}, dims={1: 1}, M_prime=1, dim=1)
    eps = np.logspace(-4, 0, 33)
    slopes = {}
    for N in (1, 2, 3):
        res = mu_bound_mc(chain, ProbeConfig(N, 0.6, seed=N), None, np.array([0.3]), 1, eps, 10**5)
        slopes[N] = loglog_slope(res["rows"], 1e-3, 1e-1)
    elapsed = time.perf_counter() - t0
    ok = all(abs(slopes[N] - N) <= 0.25 for N in slopes) and elapsed < 120
    report(6, ok, "log-log slopes " + ", ".join(f"N={N}: {s:.3f}" for N, s in slopes.items()), elapsed)
    assert ok


def test_criterion_07_end_to_end_hilbert(report):
    t0 = time.perf_counter()
    X, Z, layers = _decaying(12)
    fit = assouad_estimate(Z, dyadic_scale_grid())
    d_used = fit.s_hom_hat + 0.1
    N, s = 3, 0.6
    gamma = gamma_threshold(s, N, d_used) + 0.1
    chain = build_orthogonal_chain(layers, fit=fit)
    passed = 0
    for seed in range(200):
        L = sample_probe_map(chain, ProbeConfig(N, s, seed=seed))
        c_L, rho_L = fit_bilip_constants(L, layers, gamma)
        passed += bool(verify_almost_bilip(L, X, gamma, c_L, rho_L))
    elapsed = time.perf_counter() - t0
    rate = passed / 200
    ok = rate >= 0.95 and elapsed < 300
    report(7, ok, f"d_used={d_used:.3f}, gamma={gamma:.3f}: {passed}/200 maps almost bi-Lipschitz ({rate:.1%})", elapsed)
    assert ok


def _median_gamma_hat(mode, s, norm):
    _, _, layers = _decaying(12, norm)
    chain = build_orthogonal_chain(layers) if norm == "l2" else build_functional_chain(layers)
    g = [profile(sample_probe_map(chain, ProbeConfig(3, s, mode, seed=k)), layers).gamma_hat for k in range(200)]
    return float(np.median(g))


def test_criterion_08_mode_separation(report):
    t0 = time.perf_counter()
    hilbert = _median_gamma_hat("hilbert", 0.6, "l2")
    banach = _median_gamma_hat("banach", 1.1, "linf")
    elapsed = time.perf_counter() - t0
    ok = banach - hilbert >= 0.2 and elapsed < 600
    report(8, ok, f"median gamma_hat HILBERT {hilbert:.3f} vs BANACH {banach:.3f} (gap {banach - hilbert:.3f})", elapsed)
    assert ok


def test_criterion_09_summability(report):
    t0 = time.perf_counter()
    _, Z, layers = _decaying(22)
    fit = assouad_estimate(Z, dyadic_scale_grid())
    d_used = fit.s_hom_hat + 0.1
    N, s, T = 3, 0.6, 5000
    chain = build_orthogonal_chain(layers, fit=fit)
    cfg = ProbeConfig(N, s, seed=9)
    gamma = gamma_threshold(s, N, d_used) + 0.1
    good = failure_measure(chain, cfg, None, layers, gamma, T, d_used)
    bad = failure_measure(chain, cfg, None, layers, s, T, d_used)
    elapsed = time.perf_counter() - t0
    ok = (
        good.threshold_met and good.increments_below_ci(20)
        and not bad.threshold_met and not bad.increments_below_ci(20) and bad.regime(20) == "divergent"
        and elapsed < 300
    )
    report(
        9, ok,
        f"gamma={gamma:.3f}: tail {good.tail_sum:.4f} ({good.regime(20)}); "
        f"gamma=s={s}: tail {bad.tail_sum:.3f} ({bad.regime(20)})",
        elapsed,
    )
    assert ok


def test_criterion_10_homogeneity_estimator(report):
    t0 = time.perf_counter()
    # scale pairs stay above the sampling resolution of each finite set:
    # rho >= two grid spacings for the grid, rho >= 3^-5 for the level-7 Cantor set
    grid_pairs = [(0.5, 1 / 8), (0.5, 1 / 16), (0.5, 1 / 32), (0.25, 1 / 16), (0.25, 1 / 32)]
    cantor_pairs = [(1 / 3, 3.0 ** -(1 + m)) for m in range(1, 5)]
    s_grid = assouad_estimate(grid(64, 2), grid_pairs).s_hom_hat
    s_cantor = assouad_estimate(cantor_dust(7), cantor_pairs).s_hom_hat
    elapsed = time.perf_counter() - t0
    ok = 1.7 <= s_grid <= 2.3 and 0.53 <= s_cantor <= 0.73 and elapsed < 60
    report(10, ok, f"64x64 grid s_hom_hat={s_grid:.3f}; Cantor level 7 s_hom_hat={s_cantor:.4f} "
           f"(log2/log3={math.log(2) / math.log(3):.4f})", elapsed)
    assert ok


def test_criterion_11_determinism(report, tmp_path):
    cfg = {
        "generator": {"name": "random_homogeneous", "params": {"n": 20, "intrinsic_dim": 2, "D": 6}},
        "N": 3, "mode": "hilbert", "s_decay": 0.6, "seeds": 10, "trials": 1000, "seed": 5,
    }
    run_experiment(ExperimentConfig.from_dict(cfg), tmp_path / "a")
    run_experiment(ExperimentConfig.from_dict(json.loads(json.dumps(cfg))), tmp_path / "b", threads=4)
    names = sorted(p.name for p in (tmp_path / "a").iterdir() if p.suffix in {".csv", ".json"})
    diff = [n for n in names if (tmp_path / "a" / n).read_bytes() != (tmp_path / "b" / n).read_bytes()]
    ok = not diff and len(names) >= 9
    report(11, ok, f"{len(names) - len(diff)}/{len(names)} CSV/JSON files byte-identical across two runs")
    assert ok
