"""Random linear maps ``L = (L_1, ..., L_N)`` drawn from the probe measure.

Row ``n`` of a map is ``sum_j w_j phi_nj`` with ``w_j = max(j, 1) ** -s_decay``
and ``phi_nj`` an independent random element of the layer-``j`` block of a
chain:

* HILBERT: coordinates in the orthonormal basis of ``V_j`` are uniform on
  ``[-1/2, 1/2]``;
* BANACH: coordinates in the signed coordinate-functional basis are uniform
  on the l1 unit ball (the dual unit ball of the block), drawn by rejection
  from the bounding box ``[-1, 1]^d``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special, stats

from ._streams import chunk_generators, chunk_sizes
from .chain import FunctionalChain, OrthoChain
from .errors import ValidationError
from .geometry import NormTag, layer_index, norms

MAP_CHUNK = 2048
TAIL_TOL = 1e-6


class Mode(str, enum.Enum):
    HILBERT = "hilbert"
    BANACH = "banach"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValidationError(f"unknown mode {value!r}; expected 'hilbert' or 'banach'")


@dataclass
class ProbeConfig:
    N: int
    s_decay: float
    mode: Mode = Mode.HILBERT
    J_max: int | None = None
    seed: int = 0

    def __post_init__(self):
        self.mode = Mode.parse(self.mode)
        self.N = int(self.N)
        self.s_decay = float(self.s_decay)
        self.validate()

    def validate(self):
        if self.N < 1:
            raise ValidationError("N must be at least 1")
        if self.mode is Mode.HILBERT and not self.s_decay > 0.5:
            raise ValidationError(
                f"HILBERT mode needs s_decay > 1/2 so that sum_j j^(-2 s) converges (got {self.s_decay})"
            )
        if self.mode is Mode.BANACH and not self.s_decay > 1:
            raise ValidationError(
                f"BANACH mode needs s_decay > 1 so that sum_j j^(-s) converges (got {self.s_decay})"
            )

    def to_dict(self):
        return {"N": self.N, "s_decay": self.s_decay, "mode": self.mode.value, "J_max": self.J_max, "seed": self.seed}


def layer_weight(j, s_decay):
    return float(max(j, 1)) ** -s_decay


def chain_blocks(chain, J_max=None):
    """``[(j, B_j)]`` with ``B_j`` of shape (d_j, D); empty blocks skipped."""
    if isinstance(chain, OrthoChain):
        items = [(j, chain.bases[j]) for j in sorted(chain.bases)]
    elif isinstance(chain, FunctionalChain):
        items = [(j, chain.basis(j)) for j in sorted(chain.functionals)]
    else:
        raise ValidationError(f"unsupported chain type {type(chain).__name__}")
    items = [(j, B) for j, B in items if len(B)]
    if J_max is not None:
        items = [(j, B) for j, B in items if j <= J_max]
    return items


def chain_mode(chain):
    return Mode.HILBERT if isinstance(chain, OrthoChain) else Mode.BANACH


def chain_norm(chain):
    return NormTag.L2 if isinstance(chain, OrthoChain) else NormTag.LINF


def truncation_report(chain, cfg):
    """Relative size of the coefficient series dropped by ``J_max``.

    ``dropped`` only counts blocks that exist in the chain; ``series_tail``
    is the nominal tail of ``sum_j j^-s`` (BANACH) or
    ``(sum_j j^-2s)^(1/2)`` (HILBERT) past the deepest retained layer.
    """
    all_j = [j for j, _ in chain_blocks(chain)]
    kept = [j for j in all_j if cfg.J_max is None or j <= cfg.J_max]
    dropped = [j for j in all_j if j not in kept]
    w = lambda js, p: sum(layer_weight(j, cfg.s_decay) ** p for j in js)
    if cfg.mode is Mode.BANACH:
        rel = w(dropped, 1) / w(kept, 1) if kept else math.inf
        last = max(max(kept, default=0), 0)
        series = float(special.zeta(cfg.s_decay, last + 1))
    else:
        rel = math.sqrt(w(dropped, 2) / w(kept, 2)) if kept else math.inf
        last = max(max(kept, default=0), 0)
        series = math.sqrt(float(special.zeta(2 * cfg.s_decay, last + 1)))
    if not dropped:
        rel = 0.0
    return {"J_max": cfg.J_max, "retained_layers": kept, "dropped_layers": dropped,
            "relative_tail": rel, "series_tail": series}


def _check_truncation(chain, cfg):
    rep = truncation_report(chain, cfg)
    if not rep["retained_layers"]:
        raise ValidationError("chain has no nonempty layers to sample from")
    if rep["relative_tail"] >= TAIL_TOL:
        raise ValidationError(
            f"J_max={cfg.J_max} drops {rep['relative_tail']:.3g} of the coefficient series (limit {TAIL_TOL})"
        )
    return rep


def _l1_ball(rng, shape, d):
    """Uniform samples from the l1 unit ball in R^d, rejection from [-1, 1]^d."""
    count = int(np.prod(shape))
    out = np.empty((count, d))
    filled = 0
    while filled < count:
        need = count - filled
        # acceptance rate is 1/d!
        batch = rng.uniform(-1.0, 1.0, size=(max(need * math.factorial(d), 16), d))
        ok = batch[np.abs(batch).sum(axis=1) <= 1.0]
        take = ok[:need]
        out[filled:filled + len(take)] = take
        filled += len(take)
    return out.reshape(*shape, d)


def _draw(rng, size, cfg, blocks):
    """Coefficient arrays, one per block, each of shape (size, N, d_j)."""
    coeffs = []
    for _, B in blocks:
        d = len(B)
        if cfg.mode is Mode.HILBERT:
            coeffs.append(rng.random((size, cfg.N, d)) - 0.5)
        else:
            coeffs.append(_l1_ball(rng, (size, cfg.N), d))
    return coeffs


def _assemble(coeffs, blocks, s_decay):
    total = 0.0
    for C, (j, B) in zip(coeffs, blocks):
        total = total + layer_weight(j, s_decay) * (C @ B)
    return total


@dataclass
class ProbeMap:
    matrix: np.ndarray
    config: ProbeConfig
    phis: dict = field(default_factory=dict)
    truncation: dict = field(default_factory=dict)

    @property
    def N(self):
        return self.matrix.shape[0]

    @property
    def dim(self):
        return self.matrix.shape[1]


def iter_map_batches(chain, cfg, count, threads=1):
    """Yield ``(coeffs, blocks)`` batches for ``count`` maps in index order."""
    blocks = chain_blocks(chain, cfg.J_max)
    sizes = chunk_sizes(count, MAP_CHUNK)
    gens = chunk_generators(cfg.seed, len(sizes))
    for rng, size in zip(gens, sizes):
        yield _draw(rng, size, cfg, blocks), blocks


def sample_probe_maps(chain, cfg, count):
    """Matrices of ``count`` independent maps, shape (count, N, D).

    The stack depends only on ``(cfg.seed, count)`` and the chain;
    :func:`sample_probe_map` returns the stack of one.
    """
    if chain_mode(chain) is not cfg.mode:
        raise ValidationError(f"{cfg.mode.value} mode needs a {'orthogonal' if cfg.mode is Mode.HILBERT else 'functional'} chain")
    _check_truncation(chain, cfg)
    out = [_assemble(C, blocks, cfg.s_decay) for C, blocks in iter_map_batches(chain, cfg, count)]
    return np.concatenate(out, axis=0)


def sample_probe_map(chain, cfg):
    """One map from the probe measure, fully determined by ``cfg.seed``."""
    if chain_mode(chain) is not cfg.mode:
        raise ValidationError(f"{cfg.mode.value} mode needs a {'orthogonal' if cfg.mode is Mode.HILBERT else 'functional'} chain")
    rep = _check_truncation(chain, cfg)
    coeffs, blocks = next(iter_map_batches(chain, cfg, 1))
    matrix = _assemble(coeffs, blocks, cfg.s_decay)[0]
    phis = {(n, j): C[0, n].copy() for C, (j, _) in zip(coeffs, blocks) for n in range(cfg.N)}
    return ProbeMap(matrix=matrix, config=cfg, phis=phis, truncation=rep)


def apply_map(L, z):
    """``L z`` for a map or a plain (N, D) matrix."""
    M = L.matrix if isinstance(L, ProbeMap) else np.asarray(L, dtype=float)
    z = np.asarray(z, dtype=float)
    if z.shape[-1] != M.shape[1]:
        raise ValidationError(f"point has dimension {z.shape[-1]}, map expects {M.shape[1]}")
    return z @ M.T


def wilson_interval(hits, trials, confidence=0.95):
    ci = stats.binomtest(int(hits), int(trials)).proportion_ci(confidence_level=confidence, method="wilson")
    return float(ci.low), float(ci.high)


def mu_bound_mc(chain, cfg, f, z, j, eps_grid, trials):
    """Empirical ``mu{L : |(f + L) z| < eps 2^-j}`` on a grid of ``eps``.

    Returns a dict with per-eps rows (empirical probability, Wilson interval,
    stderr, the reference ``eps^N j^(s N)``), the companion probability that
    every row is below the threshold, and the largest ratio ``C_hat`` of
    empirical probability to reference.
    """
    if trials < 1000:
        raise ValidationError("trials must be at least 1000")
    if j < 1:
        raise ValidationError("layer index j must be at least 1")
    z = np.asarray(z, dtype=float)
    zn = float(norms(z[None, :], chain_norm(chain))[0])
    if zn == 0 or int(layer_index(zn)) != j:
        raise ValidationError(f"z with norm {zn!r} is not in layer {j} (need 2^-{j + 1} <= |z| < 2^-{j})")
    if chain_mode(chain) is not cfg.mode:
        raise ValidationError("chain type does not match the configured mode")
    rep = _check_truncation(chain, cfg)
    f = np.zeros((cfg.N, len(z))) if f is None else np.asarray(f, dtype=float)
    fz = f @ z
    eps = np.asarray(sorted(float(e) for e in eps_grid))
    thresholds = eps * 2.0**-j
    hits = np.zeros(len(eps), dtype=np.int64)
    row_hits = np.zeros(len(eps), dtype=np.int64)
    for coeffs, blocks in iter_map_batches(chain, cfg, trials):
        Lz = fz + sum(layer_weight(jj, cfg.s_decay) * (C @ (B @ z)) for C, (jj, B) in zip(coeffs, blocks))
        mag = np.linalg.norm(Lz, axis=1)
        sup = np.max(np.abs(Lz), axis=1)
        hits += np.count_nonzero(mag[:, None] < thresholds[None, :], axis=0)
        row_hits += np.count_nonzero(sup[:, None] < thresholds[None, :], axis=0)
    rows = []
    for e, h, rh in zip(eps, hits, row_hits):
        p = h / trials
        lo, hi = wilson_interval(h, trials)
        ref = e**cfg.N * j ** (cfg.s_decay * cfg.N)
        rows.append({
            "eps": float(e), "p": float(p), "ci_low": lo, "ci_high": hi,
            "stderr": math.sqrt(p * (1 - p) / trials), "reference": float(ref),
            "p_rows": float(rh / trials), "hits": int(h),
        })
    ratios = [r["p"] / r["reference"] for r in rows if r["p"] > 0 and r["reference"] > 0]
    return {"rows": rows, "C_hat": max(ratios, default=0.0), "trials": trials, "j": j,
            "N": cfg.N, "s_decay": cfg.s_decay, "mode": cfg.mode.value, "truncation": rep}


def loglog_slope(rows, p_min=1e-3, p_max=1e-1, key="p"):
    """Least-squares slope of ``log p`` against ``log eps`` for ``p`` in range."""
    pts = [(math.log(r["eps"]), math.log(r[key])) for r in rows if p_min <= r[key] <= p_max]
    if len(pts) < 2:
        raise ValidationError("fewer than two grid points inside the probability window")
    x, y = np.array(pts).T
    return float(np.polyfit(x, y, 1)[0])
