"""Greedy nets, localized covering numbers and homogeneity fits."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np
from scipy.spatial import cKDTree

from .errors import ValidationError
from .geometry import NormTag


@dataclass
class Cover:
    centers: np.ndarray
    radius: float
    covered_count: int
    center_indices: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    assignment: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))

    def __len__(self):
        return len(self.centers)


@numba.njit(cache=True)
def _farthest_point_net(points, radius, linf):
    n, dim = points.shape
    centers = np.empty(n, dtype=np.int64)
    owner = np.zeros(n, dtype=np.int64)
    mind = np.empty(n)
    if n == 0:
        return centers[:0], owner
    k = 0
    far = 0
    while True:
        centers[k] = far
        best = -1.0
        nxt = 0
        for i in range(n):
            acc = 0.0
            for c in range(dim):
                diff = abs(points[i, c] - points[far, c])
                if linf:
                    if diff > acc:
                        acc = diff
                else:
                    acc += diff * diff
            if not linf:
                acc = np.sqrt(acc)
            if k == 0 or acc < mind[i]:
                mind[i] = acc
                owner[i] = k
            # strict comparison keeps the lowest index among ties
            if mind[i] > best:
                best = mind[i]
                nxt = i
        k += 1
        if best <= radius:
            break
        far = nxt
    return centers[:k], owner


def _greedy_indices(points, radius, norm):
    """Farthest-point traversal; returns center indices and nearest-center map."""
    points = np.ascontiguousarray(points, dtype=float)
    if points.ndim != 2 or len(points) == 0:
        return np.zeros(0, dtype=int), np.zeros(0, dtype=int)
    linf = NormTag.parse(norm) is NormTag.LINF
    return _farthest_point_net(points, float(radius), linf)


def greedy_cover(P, radius):
    """Greedy ``radius``-net of ``P`` with centers drawn from ``P``.

    Starts at the lowest-index point and repeatedly adds the point farthest
    from the current centers until every point lies within ``radius``.
    Consecutive centers are therefore more than ``radius`` apart.
    """
    if not radius > 0:
        raise ValidationError("radius must be positive")
    centers, owner = _greedy_indices(P.points, radius, P.norm)
    dim = P.points.shape[1] if P.points.ndim == 2 else 0
    return Cover(
        centers=P.points[centers] if len(centers) else np.zeros((0, dim)),
        radius=float(radius),
        covered_count=len(P),
        center_indices=centers,
        assignment=owner,
    )


def _tree_p(norm):
    return 2 if NormTag.parse(norm) is NormTag.L2 else np.inf


def localized_counts(P, r, rho, tree=None):
    """Largest greedy ``rho``-net size of ``P`` restricted to a ball ``B(x, r)``.

    The maximum runs over every point ``x`` of ``P`` as a ball center.
    """
    if not 0 < rho < r:
        raise ValidationError(f"need 0 < rho < r, got rho={rho!r}, r={r!r}")
    if len(P) == 0:
        return 0
    pts = P.points
    if tree is None:
        tree = cKDTree(pts)
    # tiny slack so that points exactly at distance r stay inside the closed ball
    balls = tree.query_ball_point(pts, r * (1 + 1e-12), p=_tree_p(P.norm))
    best = 0
    seen = set()
    # largest balls first so that the size test below prunes early
    order = sorted(range(len(balls)), key=lambda i: -len(balls[i]))
    for members in (balls[i] for i in order):
        key = tuple(members)
        if len(members) <= best or key in seen:
            continue
        seen.add(key)
        centers, _ = _greedy_indices(pts[np.sort(members)], rho, P.norm)
        best = max(best, len(centers))
    return best


@dataclass
class HomogeneityFit:
    """Fitted covering law ``count <= M_hat * (r / rho) ** s_hom_hat``."""

    M_hat: float
    s_hom_hat: float
    residual: float
    scale_pairs: list

    def bound(self, ratio):
        return self.M_hat * ratio**self.s_hom_hat

    def holds(self, rtol=1e-9):
        return all(c <= self.bound(r / p) * (1 + rtol) for r, p, c in self.scale_pairs)

    def to_dict(self):
        return {
            "M_hat": self.M_hat,
            "s_hom_hat": self.s_hom_hat,
            "residual": self.residual,
            "scale_pairs": [
                {"r": r, "rho": p, "count": c} for r, p, c in self.scale_pairs
            ],
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            M_hat=float(data["M_hat"]),
            s_hom_hat=float(data["s_hom_hat"]),
            residual=float(data["residual"]),
            scale_pairs=[(float(e["r"]), float(e["rho"]), int(e["count"])) for e in data["scale_pairs"]],
        )

    def loglog_rows(self):
        return [(math.log(r / p), math.log(c)) for r, p, c in self.scale_pairs]


def assouad_estimate(P, scale_grid):
    """Fit a homogeneity exponent from localized covering counts.

    Ordinary least squares of ``log count`` against ``log(r / rho)`` gives the
    slope ``s_hom_hat`` (clipped at 0).  ``M_hat`` is then raised to the
    smallest value for which every recorded count satisfies the bound.

    Parameters
    ----------
    P : PointSet
    scale_grid : sequence of (r, rho)
        At least three pairs whose ratios span two or more octaves.
    """
    grid = [(float(r), float(p)) for r, p in scale_grid]
    if len(grid) < 3:
        raise ValidationError("need at least 3 scale pairs")
    ratios = np.array([r / p for r, p in grid])
    logr = np.log(ratios)
    if np.ptp(logr) == 0:
        raise ValidationError("no scale separation")
    if np.ptp(np.log2(ratios)) < 2 - 1e-12:
        raise ValidationError("scale pairs must span at least 2 dyadic octaves of r/rho")
    tree = cKDTree(P.points) if len(P) else None
    counts = np.array([localized_counts(P, r, p, tree=tree) for r, p in grid], dtype=float)
    logc = np.log(np.maximum(counts, 1))
    slope, intercept = np.polyfit(logr, logc, 1)
    s_hat = max(float(slope), 0.0)
    if s_hat == 0.0:
        intercept = float(np.mean(logc))
    resid = logc - (intercept + s_hat * logr)
    residual = float(np.sqrt(np.mean(resid**2)))
    log_m = float(np.max(logc - s_hat * logr))
    M_hat = max(1.0, math.exp(log_m))
    pairs = [(r, p, int(c)) for (r, p), c in zip(grid, counts)]
    return HomogeneityFit(M_hat=M_hat, s_hom_hat=s_hat, residual=residual, scale_pairs=pairs)


def dyadic_scale_grid(r_values=(1.0, 0.5, 0.25), octaves=(1, 2, 3)):
    """Pairs ``(r, r / 2**k)`` for every ``r`` and ``k``."""
    return [(r, r / 2**k) for r in r_values for k in octaves]
