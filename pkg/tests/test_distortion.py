import itertools
import math

import numpy as np
import pytest

from embedlab.chain import OrthoChain, build_orthogonal_chain
from embedlab.distortion import (
    failure_measure,
    final_constant_check,
    fit_bilip_constants,
    fit_gamma,
    gamma_threshold,
    layer_min_ratio,
    log_lower_bound,
    operator_norm_bound,
    profile,
    verify_almost_bilip,
)
from embedlab.errors import ValidationError
from embedlab.fixtures import decaying_orthogonal, random_homogeneous
from embedlab.geometry import PointSet, difference_set, dyadic_layers
from embedlab.probe import ProbeConfig, sample_probe_map


def _setup(K=8):
    X = decaying_orthogonal(K)
    Z = difference_set(X)
    layers = dyadic_layers(Z)
    return X, Z, layers, build_orthogonal_chain(layers)


@pytest.mark.parametrize("norm", ["l2", "linf"])
def test_operator_norm_bound(norm):
    rng = np.random.default_rng(0)
    M = rng.normal(size=(3, 5))
    K = operator_norm_bound(M, norm)
    if norm == "l2":
        assert K == pytest.approx(np.linalg.svd(M, compute_uv=False)[0])
    else:
        # the image of the l-infinity ball is largest at a cube vertex
        best = max(np.linalg.norm(M @ np.array(v)) for v in itertools.product((-1, 1), repeat=5))
        assert best <= K + 1e-12
    stack = operator_norm_bound(np.stack([M, 2 * M]), norm)
    np.testing.assert_allclose(stack, [K, 2 * K])


def test_identity_ratios_in_half_band():
    _, _, layers, _ = _setup()
    prof = layer_min_ratio(np.eye(8), layers)
    for r in prof.ratios.values():
        assert 0.5 <= r < 1.0


def test_zero_map_ratios():
    _, _, layers, _ = _setup()
    prof = layer_min_ratio(np.zeros((2, 8)), layers)
    assert all(r == 0.0 for r in prof.ratios.values())
    with pytest.raises(ValidationError, match="injectivity at layer"):
        fit_gamma(prof.ratios)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_layer_ratio_against_double_loop(seed):
    rng = np.random.default_rng(seed)
    pts = rng.normal(size=(50, 4))
    pts *= 0.3 / np.linalg.norm(pts, axis=1, keepdims=True)
    layers = dyadic_layers(PointSet(pts))
    M = rng.normal(size=(3, 4))
    got = layer_min_ratio(M, layers).ratios[1]
    naive = math.inf
    for z in pts:
        naive = min(naive, math.sqrt(sum(sum(M[n, k] * z[k] for k in range(4)) ** 2 for n in range(3))))
    assert got == pytest.approx(naive * 2, rel=1e-12)


def test_fit_gamma_exact_power_law():
    g, c = fit_gamma({j: j**-1.5 for j in range(1, 21)})
    assert abs(g - 1.5) <= 1e-9 and c == pytest.approx(1.0)


def test_fit_gamma_constant():
    g, c = fit_gamma({j: 1.0 for j in range(1, 21)})
    assert abs(g) <= 1e-12 and c == pytest.approx(1.0)


@pytest.mark.parametrize("seed", [0, 1, 2, 3])
def test_fit_gamma_noisy(seed):
    rng = np.random.default_rng(seed)
    ratios = {j: j**-0.5 * (1 + 0.01 * rng.normal()) for j in range(1, 21)}
    g, c = fit_gamma(ratios)
    assert abs(g - 0.5) <= 0.05
    assert all(c * j**-g <= r * (1 + 1e-12) for j, r in ratios.items())


def test_fit_gamma_needs_three_layers():
    with pytest.raises(ValidationError):
        fit_gamma({1: 1.0, 2: 0.5})
    # layer 0 never enters the fit
    with pytest.raises(ValidationError):
        fit_gamma({0: 1.0, 1: 1.0, 2: 0.5})


def test_profile_rows():
    _, _, layers, chain = _setup()
    L = sample_probe_map(chain, ProbeConfig(3, 0.6, seed=1))
    prof = profile(L, layers)
    assert math.isfinite(prof.gamma_hat)
    assert prof.rho_fit == 0.5
    rows = prof.rows(gamma=1.0)
    assert rows[0][0] == min(layers) and math.isnan(rows[0][2])
    assert all(0 < r <= prof.K for _, r, _ in rows)


def test_identity_is_almost_bilipschitz():
    X = random_homogeneous(n=30, intrinsic_dim=2, D=4, seed=0)
    for gamma in (0.1, 1.0, 3.0):
        check = verify_almost_bilip(np.eye(4), X, gamma, 1.0, math.exp(-1))
        assert check.ok and check.pairs_checked > 0


def test_zero_map_fails_with_witness():
    X = random_homogeneous(n=10, intrinsic_dim=2, D=3, seed=0)
    check = verify_almost_bilip(np.zeros((2, 3)), X, 1.0, 1.0, 0.99)
    assert not check and check.side == "lower"
    i, k = check.witness
    assert 0 < np.linalg.norm(X.points[i] - X.points[k]) <= 0.99


def test_upper_side_detected():
    X = random_homogeneous(n=10, intrinsic_dim=2, D=3, seed=0)
    check = verify_almost_bilip(5 * np.eye(3), X, 1.0, 2.0, 0.99)
    assert not check.ok and check.side == "upper"


def test_bilip_rho_must_be_below_one():
    with pytest.raises(ValidationError):
        verify_almost_bilip(np.eye(2), PointSet(np.eye(2)), 1.0, 1.0, 1.0)


def test_final_constant_check_cases():
    _, Z, _, _ = _setup()
    assert final_constant_check(np.zeros((1, 8)), Z, 1.0, 60)
    assert final_constant_check(np.eye(8), Z, 1.0, 1)
    assert not final_constant_check(np.zeros((1, 8)), Z, 1.0, 1)
    assert log_lower_bound(np.array([math.exp(-1)]), 2.0)[0] == pytest.approx(math.exp(-1) / 8)


@pytest.mark.parametrize("seed", range(5))
def test_layer_predicate_implies_log_bound(seed):
    _, Z, layers, chain = _setup(10)
    gamma = 1.5
    L = sample_probe_map(chain, ProbeConfig(3, 0.6, seed=seed))
    ratios = layer_min_ratio(L, layers).ratios
    fails = [j for j in ratios if j >= 1 and ratios[j] < j**-gamma]
    j_L = max(fails) + 1 if fails else 1
    assert final_constant_check(L, Z, gamma, j_L)


@pytest.mark.parametrize("seed", range(5))
def test_fitted_constants_pass(seed):
    X, _, layers, chain = _setup(10)
    L = sample_probe_map(chain, ProbeConfig(3, 0.6, seed=seed))
    prof = profile(L, layers)
    gamma = max(prof.gamma_hat, 0.0) + 0.01
    c_L, rho_L = fit_bilip_constants(L, layers, gamma)
    assert c_L >= prof.K
    assert verify_almost_bilip(L, X, gamma, c_L, rho_L).ok


def test_gamma_threshold():
    assert gamma_threshold(0.6, 3, 1.0) == pytest.approx(1.4)
    with pytest.raises(ValidationError):
        gamma_threshold(0.6, 3, 3.0)


def test_failure_empty_layer_and_report_invariants():
    _, _, layers, chain = _setup(8)
    cfg = ProbeConfig(3, 0.6, seed=2)
    rep = failure_measure(chain, cfg, None, layers, 2.0, 2000, d=1.0, j_range=range(1, 12))
    for j in range(7, 12):
        assert rep.per_j[j]["mu_hat"] == 0.0 and rep.per_j[j]["layer_size"] == 0
    assert rep.tail_sum == pytest.approx(sum(r["mu_hat"] for r in rep.per_j.values()))
    assert sum(rep.j_L_distribution.values()) == 2000
    assert len(rep.j_L) == 2000
    assert rep.K > 0
    assert rep.threshold_met and not rep.warnings
    d = rep.to_dict()
    assert [row["j"] for row in d["per_j"]] == list(range(1, 12))
    # net-based failure is a superset test of exact failure
    for row in rep.per_j.values():
        assert row["net_mu_hat"] >= row["mu_hat"]


@pytest.mark.parametrize("seed", [0, 1])
def test_failure_single_point_closed_form(seed):
    # z = 0.15 e_1 lies in layer 2; the block has weight 2^-s
    layers = dyadic_layers(PointSet(np.array([[0.15]])))
    chain = OrthoChain(bases={2: np.eye(1)}, dims={2: 1}, M_prime=1, dim=1)
    s, gamma, T = 0.6, 3.0, 20_000
    rep = failure_measure(chain, ProbeConfig(1, s, seed=seed), None, layers, gamma, T, d=0.5)
    thr = 2.0**-gamma * 2.0**-2
    exact = min(1.0, 2 * thr / (2.0**-s * 0.15))
    mu = rep.per_j[2]["mu_hat"]
    assert abs(mu - exact) <= 3 * math.sqrt(exact * (1 - exact) / T)
    assert not rep.threshold_met and rep.warnings


def test_failure_measure_norm_mismatch():
    _, _, layers, chain = _setup(6)
    linf_layers = dyadic_layers(difference_set(decaying_orthogonal(6, "linf")))
    with pytest.raises(ValidationError):
        failure_measure(chain, ProbeConfig(1, 0.6), None, linf_layers, 2.0, 100, d=1.0)
