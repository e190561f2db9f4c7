"""Finite-dimensional ambient model: point sets, norms, difference sets and
dyadic layers.

Points are stored as rows of a float array of shape ``(n, D)``.  The norm tag
decides whether distances are Euclidean (Hilbert model) or sup-norm (the
l-infinity Banach model).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist

from .errors import ValidationError


class NormTag(str, enum.Enum):
    L2 = "l2"
    LINF = "linf"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValidationError(f"unknown norm tag {value!r}; expected 'l2' or 'linf'")


def norms(points, norm):
    """Row norms of ``points`` under ``norm``."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if NormTag.parse(norm) is NormTag.L2:
        return np.linalg.norm(points, axis=1)
    return np.max(np.abs(points), axis=1) if points.shape[1] else np.zeros(len(points))


def distances_to(points, x, norm):
    """Distances from every row of ``points`` to the single point ``x``."""
    return norms(np.asarray(points) - np.asarray(x)[None, :], norm)


@dataclass
class PointSet:
    """A finite set of points in R^D with a norm tag.

    Parameters
    ----------
    points : array_like, shape (n, D)
    norm : NormTag or str
    label : str
    """

    points: np.ndarray
    norm: NormTag = NormTag.L2
    label: str = ""

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[None, :] if pts.size else pts.reshape(0, 0)
        if pts.ndim != 2:
            raise ValidationError("points must be a 2-d array of shape (n, D)")
        if len(pts) and pts.shape[1] < 1:
            raise ValidationError("ambient dimension D must be at least 1")
        if not np.all(np.isfinite(pts)):
            raise ValidationError("points contain NaN or Inf entries")
        self.points = pts
        self.norm = NormTag.parse(self.norm)

    def __len__(self):
        return len(self.points)

    @property
    def dim(self):
        return self.points.shape[1]

    def norms(self):
        return norms(self.points, self.norm)

    def diameter(self):
        if len(self) < 2:
            return 0.0
        metric = "euclidean" if self.norm is NormTag.L2 else "chebyshev"
        return float(pdist(self.points, metric=metric).max())

    def with_norm(self, norm, label=None):
        return PointSet(self.points.copy(), norm, self.label if label is None else label)


def normalize_diameter(P, target=1.0):
    """Scale ``P`` down so its diameter is at most ``target``.

    Returns the (possibly unchanged) set and the scale factor applied.
    """
    diam = P.diameter()
    if diam <= target:
        return P, 1.0
    scale = target / diam
    return PointSet(P.points * scale, P.norm, P.label), scale


def difference_set(X):
    """All differences ``x - y`` of points of ``X``, exact duplicates removed.

    Order follows the first occurrence in the row-major ``(i, j)`` scan, so the
    output is deterministic.
    """
    if len(X) == 0:
        raise ValidationError("empty set")
    pts = X.points
    diffs = (pts[:, None, :] - pts[None, :, :]).reshape(-1, pts.shape[1])
    # -0.0 and 0.0 must collapse to one point
    diffs = diffs + 0.0
    _, first = np.unique(diffs, axis=0, return_index=True)
    diffs = diffs[np.sort(first)]
    label = f"{X.label}-{X.label}" if X.label else "X-X"
    return PointSet(diffs, X.norm, label)


def layer_index(values):
    """Dyadic layer ``j`` with ``2**-(j+1) <= v < 2**-j`` for positive ``v``.

    Uses the binary exponent directly, so boundary values are classified
    exactly (``v = 0.5`` lands in layer 0).
    """
    _, exponent = np.frexp(np.asarray(values, dtype=float))
    return -exponent.astype(int)


@dataclass
class LayerDecomposition:
    """Partition of the nonzero points of a set into half-open dyadic bands."""

    layers: dict
    indices: dict
    norm: NormTag
    dim: int
    n_zero: int = 0
    source_size: int = 0
    label: str = ""

    @property
    def j_min(self):
        return min(self.layers) if self.layers else None

    @property
    def j_max(self):
        return max(self.layers) if self.layers else None

    def __iter__(self):
        return iter(sorted(self.layers))

    def __len__(self):
        return len(self.layers)

    def get(self, j):
        return self.layers.get(j, np.zeros((0, self.dim)))

    def all_points(self):
        if not self.layers:
            return np.zeros((0, self.dim))
        return np.vstack([self.layers[j] for j in self])


def dyadic_layers(Z):
    """Split the nonzero points of ``Z`` into layers ``Z_j``.

    Zero vectors are dropped and counted in ``n_zero``.  Layers with
    ``j < 0`` occur when ``Z`` has points of norm at least 1.
    """
    nz = Z.norms()
    nonzero = nz > 0
    js = layer_index(nz[nonzero])
    idx = np.flatnonzero(nonzero)
    layers, indices = {}, {}
    for j in np.unique(js):
        sel = idx[js == j]
        layers[int(j)] = Z.points[sel]
        indices[int(j)] = sel
    return LayerDecomposition(
        layers=layers,
        indices=indices,
        norm=Z.norm,
        dim=Z.dim,
        n_zero=int((~nonzero).sum()),
        source_size=len(Z),
        label=Z.label,
    )


def kuratowski_embed(d, n=None, tol=1e-12):
    """Isometric embedding of a finite metric space into (R^n, l-infinity).

    Point ``i`` is mapped to the row ``d[i, :]``.

    Parameters
    ----------
    d : array_like, shape (n, n)
        Symmetric distance matrix with zero diagonal.
    n : int, optional
        Number of points; checked against ``d`` when given.
    tol : float
        Slack allowed in the metric checks.
    """
    d = np.asarray(d, dtype=float)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise ValidationError("distance matrix must be square")
    if n is not None and d.shape[0] != n:
        raise ValidationError(f"distance matrix has {d.shape[0]} rows, expected {n}")
    if not np.all(np.isfinite(d)) or np.any(d < 0):
        raise ValidationError("distances must be finite and non-negative")
    if np.any(np.abs(np.diag(d)) > tol):
        raise ValidationError("distance matrix must have zero diagonal")
    if np.any(np.abs(d - d.T) > tol):
        raise ValidationError("distance matrix must be symmetric")
    m = d.shape[0]
    for k in range(m):
        # d[i, j] <= d[i, k] + d[k, j]
        excess = d - (d[:, k][:, None] + d[k, :][None, :])
        bad = np.argwhere(excess > tol)
        if len(bad):
            i, j = (int(v) for v in bad[0])
            raise ValidationError(
                f"triangle inequality violated for triple ({i}, {k}, {j}): "
                f"d({i},{j})={d[i, j]!r} > d({i},{k}) + d({k},{j})={d[i, k] + d[k, j]!r}"
            )
    return PointSet(d.copy(), NormTag.LINF, "kuratowski")
