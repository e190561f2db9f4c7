"""Deterministic point-set generators used by tests, demos and experiments."""

from __future__ import annotations

import itertools

import numpy as np

from ._streams import generator
from .errors import ValidationError
from .geometry import NormTag, PointSet, kuratowski_embed


def decaying_orthogonal(K=8, norm="l2"):
    """``x_k = 2**-k e_k`` for ``k = 1..K`` in R^K."""
    K = int(K)
    if K < 1:
        raise ValidationError("K must be at least 1")
    return PointSet(np.diag(2.0 ** -np.arange(1, K + 1)), norm, f"decaying_orthogonal(K={K})")


def grid(n=16, dim=2, norm="l2"):
    """Regular ``n**dim`` grid in the unit cube ``[0, 1]^dim``."""
    axis = np.linspace(0.0, 1.0, int(n))
    pts = np.array(list(itertools.product(axis, repeat=int(dim))))
    return PointSet(pts, norm, f"grid(n={n}, dim={dim})")


def cantor_dust(level=5, dim=1, norm="l2"):
    """Left endpoints of the level-``level`` middle-thirds intervals.

    For ``dim > 1`` the product set in ``[0, 1]^dim``.
    """
    level = int(level)
    digits = np.array(list(itertools.product((0, 2), repeat=level)), dtype=float)
    line = digits @ (3.0 ** -np.arange(1, level + 1)) if level else np.zeros(1)
    line = np.sort(line)
    pts = np.array(list(itertools.product(line, repeat=int(dim))))
    return PointSet(pts, norm, f"cantor_dust(level={level}, dim={dim})")


def random_homogeneous(n=40, intrinsic_dim=2, D=8, seed=0, norm="l2"):
    """Uniform points of a random ``intrinsic_dim``-cube placed in R^D.

    The cube ``[0, 1]^k`` is mapped by a random isometry into R^D and scaled
    to diameter at most 1.
    """
    if not 1 <= intrinsic_dim <= D:
        raise ValidationError("need 1 <= intrinsic_dim <= D")
    rng = generator(seed, 1)
    Q, _ = np.linalg.qr(rng.standard_normal((D, intrinsic_dim)))
    local = rng.random((int(n), intrinsic_dim)) / np.sqrt(intrinsic_dim)
    return PointSet(local @ Q.T, norm, f"random_homogeneous(n={n}, k={intrinsic_dim}, D={D}, seed={seed})")


def metric_kuratowski(n=12, dim=2, seed=0):
    """Kuratowski image of ``n`` random points of the unit square (Euclidean metric)."""
    rng = generator(seed, 2)
    pts = rng.random((int(n), int(dim))) / np.sqrt(dim)
    d = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=2)
    P = kuratowski_embed(d)
    P.label = f"metric_kuratowski(n={n}, seed={seed})"
    return P


GENERATORS = {
    "decaying_orthogonal": decaying_orthogonal,
    "grid": grid,
    "cantor_dust": cantor_dust,
    "random_homogeneous": random_homogeneous,
    "metric_kuratowski": metric_kuratowski,
}

SEEDED = {"random_homogeneous", "metric_kuratowski"}


def generate_fixture(name, params=None, seed=0):
    """Build a named fixture; ``seed`` only matters for the random ones."""
    if name not in GENERATORS:
        raise ValidationError(f"unknown fixture {name!r}; choose from {sorted(GENERATORS)}")
    params = dict(params or {})
    if name in SEEDED:
        params.setdefault("seed", seed)
    try:
        return GENERATORS[name](**params)
    except TypeError as exc:
        raise ValidationError(f"bad parameters for {name}: {exc}") from None


def as_norm(P, norm):
    return P.with_norm(NormTag.parse(norm))
