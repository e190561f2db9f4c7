import math
from fractions import Fraction

import numpy as np
import pytest
from scipy import integrate

from embedlab.cube_slice import (
    EXACT_MAX_DIM,
    PiecewisePolynomial,
    SliceQuery,
    _density_quadrature,
    _slab_quadrature,
    section_density,
    slab_volume_exact,
    slab_volume_mc,
    verify_ball_bound,
    weighted_uniform_density,
)
from embedlab.errors import ValidationError

SQRT2 = math.sqrt(2.0)


def irwin_hall_pdf(n, x):
    """Exact density of the sum of ``n`` uniforms on [0, 1] at rational ``x``."""
    x = Fraction(x)
    total = Fraction(0)
    for k in range(0, math.floor(x) + 1):
        total += (-1) ** k * math.comb(n, k) * (x - k) ** (n - 1)
    return total / math.factorial(n - 1)


def equal_weights_central(D):
    # sum_k U_k / sqrt(D) at 0 has density sqrt(D) * f_IH(D / 2)
    return math.sqrt(D) * float(irwin_hall_pdf(D, Fraction(D, 2)))


def trapezoid(a, b, r):
    a, b = max(a, b), min(a, b)
    r = abs(r)
    if r <= (a - b) / 2:
        return 1 / a
    if r <= (a + b) / 2:
        return ((a + b) / 2 - r) / (a * b)
    return 0.0


def unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


@pytest.mark.parametrize("D", [1, 2, 5, 12, 13, 30])
def test_coordinate_normal_gives_unit_section(D):
    a = np.zeros(D)
    a[0] = 1.0
    assert abs(section_density(a, 0.0) - 1.0) <= 1e-12


@pytest.mark.parametrize("D", [2, 5, 12])
def test_diagonal_pair_attains_sqrt2(D):
    a = np.zeros(D)
    a[:2] = 1 / SQRT2
    assert abs(section_density(a, 0.0) - SQRT2) <= 1e-9


def test_three_diagonal():
    assert section_density(unit([1, 1, 1]), 0.0) == pytest.approx(3 * math.sqrt(3) / 4, rel=1e-12)


def test_three_diagonal_against_mc_slab():
    q = SliceQuery(unit([1, 1, 1]), 0.0, 0.01)
    exact = slab_volume_exact(q).value
    mc = slab_volume_mc(q, 10**7, seed=11)
    assert abs(mc.value - exact) <= 3 * mc.stderr
    assert exact / (2 * q.eps) == pytest.approx(3 * math.sqrt(3) / 4, rel=1e-3)


@pytest.mark.parametrize("D", [2, 3, 4, 7, 10, 12])
def test_irwin_hall_central_values(D):
    assert section_density(np.full(D, 1 / math.sqrt(D)), 0.0) == pytest.approx(equal_weights_central(D), rel=1e-12)


@pytest.mark.parametrize("D", [13, 16, 25])
def test_quadrature_path_matches_irwin_hall(D):
    assert abs(section_density(np.full(D, 1 / math.sqrt(D)), 0.0) - equal_weights_central(D)) <= 1e-8


@pytest.mark.parametrize("seed", [0, 1, 2, 3, 4])
def test_two_weights_trapezoid(seed):
    rng = np.random.default_rng(seed)
    a = unit(rng.uniform(0.1, 1.0, 2))
    for r in rng.uniform(-0.8, 0.8, 10):
        assert section_density(a, r) == pytest.approx(trapezoid(a[0], a[1], r), rel=1e-12, abs=1e-14)


@pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
@pytest.mark.parametrize("seed", [0, 1, 2])
@pytest.mark.parametrize("D", [3, 6, 11])
def test_exact_and_quadrature_paths_agree(seed, D):
    rng = np.random.default_rng(seed)
    a = unit(rng.normal(size=D))
    w = np.sort(np.abs(a))[::-1]
    for r in (0.0, 0.1, 0.3):
        exact = section_density(a, r)
        quad, achieved = _density_quadrature(w, r)
        assert abs(exact - quad) <= 1e-8 and achieved <= 1e-8
    q = SliceQuery(a, 0.05, 0.2)
    assert abs(slab_volume_exact(q).value - _slab_quadrature(w, q.y, q.eps)[0]) <= 1e-8


@pytest.mark.parametrize("seed", [0, 1])
@pytest.mark.parametrize("D", [2, 4, 9, 15])
def test_density_integrates_to_one(seed, D):
    rng = np.random.default_rng(seed)
    a = unit(rng.normal(size=D))
    half = np.abs(a).sum() / 2
    val, _ = integrate.quad(lambda r: section_density(a, r), -half, half, limit=200, epsabs=1e-11)
    assert abs(val - 1.0) <= 1e-8


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_symmetries(seed):
    rng = np.random.default_rng(seed)
    a = unit(rng.normal(size=6))
    perm = rng.permutation(6)
    signs = rng.choice([-1.0, 1.0], 6)
    for r in (0.0, 0.17, 0.4):
        v = section_density(a, r)
        assert section_density(a, -r) == pytest.approx(v, rel=1e-12, abs=1e-15)
        assert section_density(signs * a[perm], r) == pytest.approx(v, rel=1e-12, abs=1e-15)


def test_zero_coefficients_dropped():
    a = np.zeros(8)
    a[[1, 5]] = 1 / SQRT2
    assert section_density(a, 0.2) == pytest.approx(section_density(unit([1, 1]), 0.2), rel=1e-14)


def test_outside_support_is_zero():
    assert section_density(unit([1, 1]), 0.8) == 0.0


@pytest.mark.parametrize("bad", [[1.0, 1.0], [0.0, 0.0], [1.0 + 1e-9], [np.nan, 1.0]])
def test_non_unit_normal_rejected(bad):
    with pytest.raises(ValidationError):
        section_density(np.array(bad), 0.0)


def test_piecewise_polynomial_cdf_endpoints():
    pp = weighted_uniform_density([0.6, 0.5, 0.3])
    assert isinstance(pp, PiecewisePolynomial)
    assert pp.cdf(np.array([-1.0]))[0] == 0.0
    assert pp.cdf(np.array([1.0]))[0] == pytest.approx(1.0, abs=1e-14)


def test_slab_examples():
    assert slab_volume_exact(SliceQuery(np.array([1.0]), 0.0, 0.1)).value == pytest.approx(0.2, abs=1e-15)
    d2 = slab_volume_exact(SliceQuery(unit([1, 1]), 0.0, 0.05)).value
    assert d2 == pytest.approx(2 * SQRT2 * (0.05 - SQRT2 * 0.05**2 / 2), rel=1e-12)
    assert d2 == pytest.approx(0.13642135623730953, rel=1e-12)
    a = unit([3, 1, 2])
    assert slab_volume_exact(SliceQuery(a, 0.3, np.abs(a).sum() / 2 + 0.3)).value == 1.0
    with pytest.raises(ValidationError):
        slab_volume_exact(SliceQuery(a, 0.0, 0.0))


@pytest.mark.parametrize("seed", [0, 1])
def test_slab_mc_examples(seed):
    q1 = SliceQuery(np.array([1.0]), 0.0, 0.1)
    r1 = slab_volume_mc(q1, 10**6, seed)
    assert r1.method == "MC" and abs(r1.value - 0.2) <= 3 * r1.stderr
    q2 = SliceQuery(unit([1, 1]), 0.0, 0.05)
    r2 = slab_volume_mc(q2, 10**6, seed)
    assert abs(r2.value - 0.13642135623730953) <= 3 * r2.stderr
    assert slab_volume_mc(SliceQuery(unit([1, 1]), 0.0, 0.0), 10, seed).value == 0.0


def test_slab_mc_independent_of_threads():
    q = SliceQuery(unit([1, 2, 3]), 0.1, 0.05)
    one = slab_volume_mc(q, 200_000, seed=5, threads=1)
    many = slab_volume_mc(q, 200_000, seed=5, threads=4)
    assert one.value == many.value


@pytest.mark.parametrize("D", [2, 3, 5, 8])
def test_exact_vs_mc_random_queries(D):
    # 100 queries per dimension: with this many comparisons an occasional
    # 3-sigma excursion is expected, so all must be within 4 sigma and at
    # least 97% within 3 sigma
    rng = np.random.default_rng(100 + D)
    z = []
    for k in range(100):
        a = unit(rng.normal(size=D))
        half = np.abs(a).sum() / 2
        q = SliceQuery(a, rng.uniform(-half, half), rng.uniform(0.01, 0.3))
        ex = slab_volume_exact(q).value
        mc = slab_volume_mc(q, 20_000, seed=[D, k])
        # sampling sd at the true p (the plug-in stderr is 0 when no sample hits)
        sd = math.sqrt(ex * (1 - ex) / 20_000)
        z.append(abs(mc.value - ex) / sd if sd > 0 else (0.0 if mc.value == ex else math.inf))
    z = np.array(z)
    assert np.all(z <= 4.0)
    assert np.mean(z <= 3.0) >= 0.97


def test_ball_bound_one_dimension():
    rep = verify_ball_bound(1, 20, seed=0)
    assert rep["max_density"] == 1.0 and not rep["exceeds_bound"]


def test_ball_bound_two_dimensions():
    rep = verify_ball_bound(2, 1000, seed=0)
    assert rep["max_central"] <= SQRT2 + 1e-6 and not rep["exceeds_bound"]
    a = np.abs(rep["argmax_normal"])
    assert np.allclose(a, 1 / SQRT2, atol=0.05)
    assert rep["max_central"] > SQRT2 - 0.01


def test_ball_bound_twenty_dimensions():
    rep = verify_ball_bound(20, 1000, seed=1)
    assert rep["max_central"] <= SQRT2 + 1e-6
    assert rep["min_central"] >= 1 - 1e-6


def test_exact_dim_limit_constant():
    assert EXACT_MAX_DIM == 12
