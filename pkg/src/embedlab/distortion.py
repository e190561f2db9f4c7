"""Distortion of sampled maps on dyadic layers.

For a map ``L`` and layer ``Z_j`` the basic statistic is the ratio
``min_{z in Z_j} |L z| * 2**j``.  A map is in the failure set ``Q_j`` when
``|(f + L) z| <= j**-gamma * 2**-j`` for some ``z`` in ``Z_j``; if it avoids
every ``Q_j`` from ``j_L`` on, then
``|L z| >= 2**-(1 + gamma) * |z| / |log |z|| ** gamma`` for ``|z| < 2**-j_L``.
Logarithms are natural throughout.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .covering import greedy_cover
from .errors import InequalityViolation, ValidationError
from .geometry import NormTag, PointSet, norms
from .probe import ProbeMap, chain_norm, iter_map_batches, wilson_interval, _assemble, _check_truncation


def _matrix(L):
    return L.matrix if isinstance(L, ProbeMap) else np.atleast_2d(np.asarray(L, dtype=float))


def operator_norm_bound(M, norm):
    """Bound on ``sup |M x|_2`` over the unit ball of ``norm``.

    Exact spectral norm for l2; for l-infinity the Euclidean norm of the row
    l1-norms.  Works on a single (N, D) matrix or a stack (k, N, D).
    """
    M = np.asarray(M, dtype=float)
    if NormTag.parse(norm) is NormTag.L2:
        return np.linalg.norm(M, ord=2, axis=(-2, -1))
    return np.sqrt(np.sum(np.sum(np.abs(M), axis=-1) ** 2, axis=-1))


@dataclass
class DistortionProfile:
    ratios: dict
    gamma_hat: float = math.nan
    c_fit: float = math.nan
    rho_fit: float = math.nan
    K: float = math.nan

    def rows(self, gamma=None):
        out = []
        for j in sorted(self.ratios):
            ref = j ** -gamma if (gamma is not None and j >= 1) else math.nan
            out.append((j, self.ratios[j], ref))
        return out


def layer_min_ratio(L, layers):
    """Per-layer ``min |L z| * 2**j`` over the stored points of each layer."""
    M = _matrix(L)
    ratios = {}
    for j in layers:
        Z = layers.layers[j]
        ratios[j] = float(np.min(np.linalg.norm(Z @ M.T, axis=1))) * 2.0**j
    return DistortionProfile(ratios=ratios, K=float(operator_norm_bound(M, layers.norm)))


def fit_gamma(ratios, j_range=None):
    """Power-law fit ``ratio_j ~ c j**-gamma``.

    The slope of ``log ratio_j`` against ``log j`` (least squares over layers
    ``j >= 1`` in ``j_range``) gives ``-gamma_hat``; ``c_fit`` is the largest
    constant for which ``c j**-gamma_hat`` stays below every ratio.
    """
    if isinstance(ratios, DistortionProfile):
        ratios = ratios.ratios
    js = sorted(j for j in ratios if j >= 1 and (j_range is None or j in j_range))
    for j in js:
        if not ratios[j] > 0:
            raise ValidationError(f"embedding fails injectivity at layer {j}")
    if len(js) < 3:
        raise ValidationError("need at least 3 layers with j >= 1 to fit gamma")
    x = np.log(js)
    y = np.log([ratios[j] for j in js])
    slope, _ = np.polyfit(x, y, 1)
    gamma_hat = -float(slope)
    c_fit = float(np.min(np.exp(y + gamma_hat * x)))
    return gamma_hat, c_fit


def profile(L, layers, j_range=None):
    """Ratios plus fitted exponent; ``rho_fit`` is ``2**-j`` at the first fitted layer."""
    prof = layer_min_ratio(L, layers)
    gamma_hat, c_fit = fit_gamma(prof.ratios, j_range)
    prof.gamma_hat, prof.c_fit = gamma_hat, c_fit
    js = [j for j in prof.ratios if j >= 1 and (j_range is None or j in j_range)]
    prof.rho_fit = 2.0 ** -min(js)
    return prof


@dataclass
class BilipCheck:
    ok: bool
    witness: tuple | None = None
    side: str = ""
    pairs_checked: int = 0

    def __bool__(self):
        return self.ok


def verify_almost_bilip(L, X, gamma, c_L, rho_L):
    """Check the two-sided log-Lipschitz bound on all close pairs of ``X``.

    For every pair with ``0 < |x - y| <= rho_L``::

        |x - y| / (c_L |log|x - y||**gamma) <= |L(x - y)| <= c_L |x - y|

    Returns a :class:`BilipCheck`; its ``witness`` is the first violating
    index pair.
    """
    if not rho_L < 1:
        raise ValidationError("rho_L must be below 1")
    M = _matrix(L)
    pts = X.points
    n = len(pts)
    iu, ju = np.triu_indices(n, k=1)
    Z = pts[iu] - pts[ju]
    zn = norms(Z, X.norm)
    sel = (zn > 0) & (zn <= rho_L)
    image = np.linalg.norm(Z[sel] @ M.T, axis=1)
    zs = zn[sel]
    upper_bad = image > c_L * zs * (1 + 1e-12)
    lower_bad = image < zs / (c_L * np.abs(np.log(zs)) ** gamma)
    pairs = np.flatnonzero(sel)
    for bad, side in ((lower_bad, "lower"), (upper_bad, "upper")):
        if bad.any():
            k = pairs[np.flatnonzero(bad)[0]]
            return BilipCheck(False, (int(iu[k]), int(ju[k])), side, int(sel.sum()))
    return BilipCheck(True, None, "", int(sel.sum()))


def log_lower_bound(zn, gamma):
    return 2.0 ** -(1 + gamma) * zn / np.abs(np.log(zn)) ** gamma


def final_constant_check(L, Z, gamma, j_L):
    """Check ``|L z| >= 2**-(1+gamma) |z| / |log|z||**gamma`` for ``|z| < 2**-j_L``.

    ``Z`` holds the test vectors (typically a difference set).  The bound is
    vacuously true when no stored vector is small enough.
    """
    M = _matrix(L)
    zn = Z.norms()
    sel = (zn > 0) & (zn < 2.0 ** -j_L)
    if not sel.any():
        return True
    image = np.linalg.norm(Z.points[sel] @ M.T, axis=1)
    return bool(np.all(image >= log_lower_bound(zn[sel], gamma)))


def fit_bilip_constants(L, layers, gamma, j_range=None):
    """Constants ``(c_L, rho_L)`` read off the fitted distortion profile.

    The profile gives ``|L z| >= c_fit j**-gamma_hat 2**-j`` on the fitted
    layers.  Since ``2**-j > |z|`` and ``j <= |log |z|| / log 2`` there, the
    lower bound holds with ``c_L = 1 / (c_fit log(2)**gamma)`` whenever
    ``gamma >= gamma_hat``; ``c_L`` is also raised to the operator-norm bound
    for the upper side.  ``rho_L`` is ``2**-j`` at the first fitted layer.
    """
    prof = profile(L, layers, j_range)
    c_L = max(prof.K, 1.0 / (prof.c_fit * math.log(2.0) ** gamma))
    return c_L, prof.rho_fit


@dataclass
class FailureReport:
    per_j: dict
    tail_sum: float
    j_L_distribution: dict
    gamma: float
    d: float
    N: int
    s_decay: float
    K: float
    C_prime: float
    threshold_met: bool
    trials: int
    warnings: list = field(default_factory=list)
    j_L: list = field(default_factory=list)

    @property
    def exponent(self):
        return self.gamma * self.d - self.N * (self.gamma - self.s_decay)

    def cumulative(self):
        total, out = 0.0, []
        for j in sorted(self.per_j):
            total += self.per_j[j]["mu_hat"]
            out.append((j, total))
        return out

    def increments_below_ci(self, j_from):
        """True when every increment ``mu_hat(Q_J)``, ``J >= j_from``, is smaller
        than the width of the confidence interval of the partial sum up to ``J``."""
        rows = [self.per_j[j] for j in sorted(self.per_j) if j >= j_from]
        return bool(rows) and all(r["mu_hat"] < r["sum_ci_high"] - r["sum_ci_low"] for r in rows)

    def regime(self, j_from=20):
        j_from = min(j_from, max(self.per_j))
        return "summable" if self.increments_below_ci(j_from) else "divergent"

    def to_dict(self):
        return {
            "gamma": self.gamma, "d": self.d, "N": self.N, "s_decay": self.s_decay,
            "exponent": self.exponent, "K": self.K, "C_prime": self.C_prime,
            "threshold_met": self.threshold_met, "trials": self.trials,
            "tail_sum": self.tail_sum,
            "per_j": [dict(j=j, **self.per_j[j]) for j in sorted(self.per_j)],
            "cumulative": [{"j": j, "sum": s} for j, s in self.cumulative()],
            "j_L_distribution": {str(k): v for k, v in sorted(self.j_L_distribution.items())},
            "warnings": list(self.warnings),
        }


SUM_Z = 1.959963984540054


def gamma_threshold(s_decay, N, d):
    if not d < N:
        raise ValidationError(f"need d < N (got d={d}, N={N})")
    return (s_decay * N + 1) / (N - d)


def failure_measure(chain, cfg, f, layers, gamma, trials, d, j_range=None, threads=1):
    """Empirical measure of the failure sets ``Q_j`` over ``trials`` sampled maps.

    Membership is decided exactly on every stored point of ``Z_j``.  Each
    layer is also covered by a greedy net of radius ``j**-gamma 2**-j`` and
    the perturbation bound ``|(f+L) z| >= |(f+L) z_i| - K |z - z_i|`` is
    asserted for every map and point, ``K`` being the map's own operator
    norm bound.
    """
    if chain_norm(chain) is not layers.norm:
        raise ValidationError("chain and layers use different norms")
    _check_truncation(chain, cfg)
    N, s = cfg.N, cfg.s_decay
    warnings = []
    above = gamma > gamma_threshold(s, N, d)
    if not above:
        warnings.append(
            f"gamma={gamma} does not exceed (sN+1)/(N-d)={gamma_threshold(s, N, d):.6g}; Q_j need not be summable"
        )
    if j_range is None:
        js = [j for j in layers if j >= 1]
        js = list(range(min(js), max(js) + 1)) if js else []
    else:
        js = sorted(j for j in j_range if j >= 1)
    if not js:
        raise ValidationError("no layers with j >= 1")
    D = layers.dim
    f = np.zeros((N, D)) if f is None else np.asarray(f, dtype=float)

    nets = {}
    for j in js:
        Z = layers.get(j)
        if len(Z):
            cover = greedy_cover(PointSet(Z, layers.norm), j**-gamma * 2.0**-j)
            nets[j] = (Z, cover)

    fail = {j: [] for j in js}
    net_fail = {j: [] for j in js}
    K_all = []
    for coeffs, blocks in iter_map_batches(chain, cfg, trials, threads=threads):
        M = f[None] + _assemble(coeffs, blocks, s)
        K_maps = operator_norm_bound(M, layers.norm)
        K_all.append(K_maps)
        for j in js:
            size = M.shape[0]
            if j not in nets:
                fail[j].append(np.zeros(size, dtype=bool))
                net_fail[j].append(np.zeros(size, dtype=bool))
                continue
            Z, cover = nets[j]
            thr = j**-gamma * 2.0**-j
            vals = np.linalg.norm(np.einsum("md,knd->kmn", Z, M), axis=2)
            cvals = vals[:, cover.center_indices]
            fail[j].append(vals.min(axis=1) <= thr)
            owner_vals = cvals[:, cover.assignment]
            dist = norms(Z - cover.centers[cover.assignment], layers.norm)
            slack = K_maps[:, None] * dist[None, :]
            if np.any(vals < owner_vals - slack - 1e-12 * (1 + owner_vals)):
                raise InequalityViolation(f"net perturbation bound violated in layer {j}")
            K_batch = K_maps.max()
            net_fail[j].append(cvals.min(axis=1) <= (1 + K_batch) * thr)

    K = float(np.concatenate(K_all).max())
    per_j = {}
    fail = {j: np.concatenate(v) for j, v in fail.items()}
    net_fail = {j: np.concatenate(v) for j, v in net_fail.items()}
    exponent = gamma * d - N * (gamma - s)
    for j in js:
        hits = int(fail[j].sum())
        lo, hi = wilson_interval(hits, trials)
        per_j[j] = {
            "mu_hat": hits / trials, "hits": hits, "ci_low": lo, "ci_high": hi,
            "net_size": len(nets[j][1]) if j in nets else 0,
            "layer_size": len(nets[j][0]) if j in nets else 0,
            "net_mu_hat": float(net_fail[j].mean()),
            "decay": float(j**exponent),
        }
    positive = [per_j[j]["mu_hat"] / per_j[j]["decay"] for j in js if per_j[j]["mu_hat"] > 0]
    C_prime = max(positive, default=0.0)
    for j in js:
        per_j[j]["reference"] = C_prime * per_j[j]["decay"]

    stack = np.vstack([fail[j] for j in js])
    # partial sums sum_{j <= J} mu_hat(Q_j) are means of per-map failure counts
    running = np.cumsum(stack, axis=0)
    for row, j in zip(running, js):
        mean = float(row.mean())
        half = SUM_Z * float(row.std(ddof=1)) / math.sqrt(trials) if trials > 1 else math.inf
        per_j[j].update(partial_sum=mean, sum_ci_low=mean - half, sum_ci_high=mean + half)
    j_L = []
    for k in range(trials):
        col = stack[:, k]
        failing = [js[i] for i in np.flatnonzero(col)]
        j_L.append(max(failing) + 1 if failing else js[0])
    return FailureReport(
        per_j=per_j,
        tail_sum=float(sum(per_j[j]["mu_hat"] for j in js)),
        j_L_distribution=dict(Counter(j_L)),
        gamma=float(gamma), d=float(d), N=N, s_decay=s, K=K, C_prime=C_prime,
        threshold_met=bool(above), trials=int(trials), warnings=warnings, j_L=j_L,
    )
