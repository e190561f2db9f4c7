"""Hyperplane sections and slabs of the unit cube ``[-1/2, 1/2]^D``.

The (D-1)-volume of the section of the cube by the hyperplane
``{x : x . a = r}`` (``|a| = 1``) equals the density at ``r`` of
``S = sum_k a_k U_k`` with ``U_k`` independent uniform on ``[-1/2, 1/2]``.
Two routes compute that density:

* exact: repeated convolution of piecewise polynomials, one uniform factor at
  a time (used when at most ``EXACT_MAX_DIM`` coefficients are nonzero);
* quadrature: ``f(r) = (1/pi) int_0^inf cos(r t) prod_k sinc(a_k t / 2) dt``
  for larger dimension, truncated where the product envelope is negligible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from math import comb

import numpy as np
from scipy import integrate

from ._streams import chunked_sum
from .errors import QuadratureError, ValidationError

EXACT_MAX_DIM = 12
UNIT_TOL = 1e-12
QUAD_TOL = 1e-8
SQRT2 = math.sqrt(2.0)


def _taylor_shift(coefs, delta):
    """Coefficients of ``p(t + delta)`` for each row ``p`` of ``coefs``.

    ``coefs`` has shape (m, deg + 1) in ascending powers; ``delta`` has shape (m,).
    """
    m, n = coefs.shape
    powers = delta[:, None] ** np.arange(n)[None, :]
    out = np.zeros_like(coefs)
    for i in range(n):
        for k in range(i, n):
            out[:, i] += coefs[:, k] * comb(k, i) * powers[:, k - i]
    return out


def _horner(coefs, t):
    acc = np.zeros_like(t)
    for k in range(coefs.shape[1] - 1, -1, -1):
        acc = acc * t + coefs[:, k]
    return acc


class PiecewisePolynomial:
    """Compactly supported piecewise polynomial.

    Segment ``i`` covers ``[knots[i], knots[i+1])`` and carries a polynomial
    in the local variable ``t = x - knots[i]``; ``coefs[i, k]`` multiplies
    ``t**k``.  The function is zero outside ``[knots[0], knots[-1]]``.
    """

    def __init__(self, knots, coefs):
        self.knots = np.asarray(knots, dtype=float)
        self.coefs = np.atleast_2d(np.asarray(coefs, dtype=float))
        if len(self.knots) != len(self.coefs) + 1:
            raise ValueError("need one more knot than segments")

    @classmethod
    def uniform(cls, width):
        h = width / 2
        return cls([-h, h], [[1.0 / width]])

    @property
    def degree(self):
        return self.coefs.shape[1] - 1

    def _locate(self, x):
        idx = np.searchsorted(self.knots, x, side="right") - 1
        nseg = len(self.coefs)
        inside = (x >= self.knots[0]) & (x <= self.knots[-1])
        return np.clip(idx, 0, nseg - 1), inside

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        flat = np.atleast_1d(x).ravel()
        idx, inside = self._locate(flat)
        vals = _horner(self.coefs[idx], flat - self.knots[idx])
        vals = np.where(inside, vals, 0.0)
        return vals.reshape(x.shape) if x.ndim else float(vals[0])

    def antiderivative(self):
        """Continuous antiderivative that vanishes left of the support.

        The result is a piecewise polynomial on the same knots; beyond the
        right end it is constant (see :meth:`cdf`).
        """
        m, n = self.coefs.shape
        integ = np.zeros((m, n + 1))
        integ[:, 1:] = self.coefs / np.arange(1, n + 1)[None, :]
        widths = np.diff(self.knots)
        increments = _horner(integ, widths)
        integ[:, 0] = np.concatenate([[0.0], np.cumsum(increments)[:-1]])
        anti = PiecewisePolynomial(self.knots, integ)
        anti.total = float(np.sum(increments))
        return anti

    def cdf(self, x):
        anti = self.antiderivative()
        x = np.asarray(x, dtype=float)
        inner = anti(x)
        return np.where(x > self.knots[-1], anti.total, np.where(x < self.knots[0], 0.0, inner))

    def convolve_uniform(self, width):
        """Density of ``S + W`` where ``W`` is uniform on ``[-width/2, width/2]``.

        ``g(x) = (F(x + h) - F(x - h)) / width`` with ``F`` the antiderivative,
        rebuilt segment by segment in local monomial bases.
        """
        h = width / 2
        anti = self.antiderivative()
        m, n = anti.coefs.shape
        # extended segment table: [zero, segments..., constant total]
        ext = np.zeros((m + 2, n))
        ext[1:-1] = anti.coefs
        ext[-1, 0] = anti.total
        left = np.concatenate([[0.0], self.knots[:-1], [0.0]])

        knots = np.sort(np.concatenate([self.knots - h, self.knots + h]))
        scale = max(abs(knots[0]), abs(knots[-1]), 1.0)
        keep = np.concatenate([[True], np.diff(knots) > 1e-14 * scale])
        knots = knots[keep]
        knots[-1] = self.knots[-1] + h

        mids = 0.5 * (knots[:-1] + knots[1:])

        def piece(offset):
            pos = mids + offset
            idx = np.searchsorted(self.knots, pos, side="right")  # 0 .. m+1 in ext
            idx = np.where(pos > self.knots[-1], m + 1, idx)
            delta = knots[:-1] + offset - left[idx]
            return _taylor_shift(ext[idx], np.where((idx == 0) | (idx == m + 1), 0.0, delta))

        coefs = (piece(h) - piece(-h)) / width
        return PiecewisePolynomial(knots, coefs)


def weighted_uniform_density(weights):
    """Exact density of ``sum_k w_k U_k`` as a :class:`PiecewisePolynomial`."""
    w = np.sort(np.abs(np.asarray(weights, dtype=float)))[::-1]
    w = w[w > 0]
    if len(w) == 0:
        raise ValidationError("all coefficients are zero")
    pp = PiecewisePolynomial.uniform(w[0])
    for width in w[1:]:
        pp = pp.convolve_uniform(width)
    return pp


def _check_unit(a):
    a = np.asarray(a, dtype=float).ravel()
    if a.size == 0 or not np.all(np.isfinite(a)):
        raise ValidationError("normal vector must be a nonempty finite vector")
    norm = float(np.linalg.norm(a))
    if abs(norm - 1.0) > UNIT_TOL:
        raise ValidationError(f"normal vector must have unit Euclidean norm (got {norm!r})")
    return a


def _active(a):
    w = np.abs(a)
    return np.sort(w[w > 0])[::-1]


def _char_envelope(w, t):
    return float(np.prod(np.minimum(1.0, 2.0 / (w * t))))


def _truncation_point(w, tol):
    """Smallest power-of-two ``T`` with envelope tail mass below ``tol``.

    For ``t >= T`` every factor with ``w_k T >= 2`` decays like ``1/t``, so the
    tail is at most ``env(T) * T / (m - 1)`` with ``m`` such factors.
    """
    T = 8.0
    while True:
        m = int(np.sum(w * T >= 2.0))
        if m >= 2:
            tail = _char_envelope(w, T) * T / (m - 1)
            if tail < tol:
                return T, tail
        T *= 2
        if T > 1e9:
            raise QuadratureError("characteristic function decays too slowly to truncate", achieved=np.inf)


def _char_fn(w, t):
    return np.prod(np.sinc(w * t / (2 * np.pi)))


def _quad_pieces(func, T, tol):
    edges = [0.0]
    step = 4.0
    while edges[-1] < T:
        edges.append(min(T, edges[-1] + step))
        step *= 1.25
    total, err = 0.0, 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, e = integrate.quad(func, lo, hi, epsabs=tol / 100, epsrel=1e-12, limit=400)
        total += val
        err += e
    return total, err


def _density_quadrature(w, r, tol=QUAD_TOL):
    T, tail = _truncation_point(w, tol / 10)
    val, err = _quad_pieces(lambda t: math.cos(r * t) * _char_fn(w, t), T, tol)
    achieved = (err + tail) / math.pi
    if achieved > tol:
        raise QuadratureError(f"quadrature reached only {achieved:.3g}", achieved=achieved)
    return val / math.pi, achieved


def _slab_quadrature(w, y, eps, tol=QUAD_TOL):
    # P(|y + S| <= eps) = (2/pi) int_0^inf sin(eps t) cos(y t) / t * phi(t) dt
    T, tail = _truncation_point(w, tol / 10)
    val, err = _quad_pieces(
        lambda t: eps * np.sinc(eps * t / np.pi) * math.cos(y * t) * _char_fn(w, t), T, tol
    )
    achieved = 2 * (err + tail / T) / math.pi
    if achieved > tol:
        raise QuadratureError(f"quadrature reached only {achieved:.3g}", achieved=achieved)
    return 2 * val / math.pi, achieved


def section_density(a, r=0.0):
    """(D-1)-volume of ``{x . a = r}`` intersected with the unit cube.

    Parameters
    ----------
    a : array_like
        Unit normal in R^D.
    r : float
        Signed offset of the hyperplane along ``a``.
    """
    a = _check_unit(a)
    w = _active(a)
    r = float(r)
    if abs(r) > w.sum() / 2:
        return 0.0
    if len(w) <= EXACT_MAX_DIM:
        return float(weighted_uniform_density(w)(r))
    val, _ = _density_quadrature(w, r)
    return max(val, 0.0)


@dataclass
class SliceQuery:
    a: np.ndarray
    y: float = 0.0
    eps: float = 0.0

    def __post_init__(self):
        self.a = _check_unit(self.a)
        self.y = float(self.y)
        self.eps = float(self.eps)
        if not self.eps >= 0:
            raise ValidationError("eps must be non-negative")


@dataclass
class SliceResult:
    value: float
    method: str
    stderr: float = 0.0
    achieved_tol: float = 0.0
    extra: dict = field(default_factory=dict)


def slab_volume_exact(q):
    """Probability that ``|y + a . U| <= eps`` for ``U`` uniform on the cube."""
    if not q.eps > 0:
        raise ValidationError("eps must be positive for the exact slab volume")
    w = _active(q.a)
    lo, hi = -q.eps - q.y, q.eps - q.y
    half = w.sum() / 2
    if lo <= -half and hi >= half:
        return SliceResult(1.0, "EXACT")
    if hi <= -half or lo >= half:
        return SliceResult(0.0, "EXACT")
    if len(w) <= EXACT_MAX_DIM:
        pp = weighted_uniform_density(w)
        c = pp.cdf(np.array([lo, hi]))
        return SliceResult(float(min(1.0, max(0.0, c[1] - c[0]))), "EXACT")
    val, achieved = _slab_quadrature(w, q.y, q.eps)
    return SliceResult(float(min(1.0, max(0.0, val))), "EXACT", achieved_tol=achieved)


def slab_volume_mc(q, samples, seed, threads=1):
    """Monte-Carlo estimate of the slab probability with binomial stderr.

    Samples are drawn in fixed-size chunks, each from its own child seed, so
    the estimate does not depend on ``threads``.
    """
    if samples < 1:
        raise ValidationError("samples must be at least 1")
    if q.eps == 0:
        return SliceResult(0.0, "MC", 0.0)
    a = q.a

    def count(rng, size):
        x = rng.random((size, len(a))) - 0.5
        return int(np.count_nonzero(np.abs(q.y + x @ a) <= q.eps))

    hits = chunked_sum(count, samples, seed, threads=threads)
    p = hits / samples
    return SliceResult(p, "MC", math.sqrt(p * (1 - p) / samples), extra={"hits": hits, "samples": samples})


def random_unit_vectors(D, count, rng):
    v = rng.standard_normal((count, D))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def verify_ball_bound(D, trials, seed, tol=1e-6):
    """Sample unit normals and report the largest section volume seen.

    Each normal is evaluated through the origin and at one random offset
    inside the support of ``a . U``.
    """
    if D < 1:
        raise ValidationError("D must be at least 1")
    rng = np.random.default_rng(seed)
    normals = random_unit_vectors(D, trials, rng)
    central = np.empty(trials)
    offset = np.empty(trials)
    for i, a in enumerate(normals):
        # renormalize so the unit check passes after the float division
        a = a / np.linalg.norm(a)
        central[i] = section_density(a, 0.0)
        r = rng.uniform(-0.5, 0.5) * np.abs(a).sum()
        offset[i] = section_density(a, r)
    best = int(np.argmax(central))
    overall = max(central.max(), offset.max())
    return {
        "D": D,
        "trials": trials,
        "seed": seed,
        "max_density": float(overall),
        "max_central": float(central[best]),
        "argmax_normal": normals[best].tolist(),
        "min_central": float(central.min()),
        "max_offset": float(offset.max()),
        "exceeds_bound": bool(overall > SQRT2 + tol),
        "bound": SQRT2,
    }
