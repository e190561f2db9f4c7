"""Layer-by-layer subspace chains built from greedy covers.

``build_orthogonal_chain`` (Hilbert model) covers each layer ``Z_j`` by balls
of radius ``2**-(j+2)``, spans the centers and orthogonalizes the new
directions against all earlier layers, so that for every ``z`` in ``Z_n`` the
projection onto the first ``n`` blocks keeps norm at least ``2**-(n+2)``.

``build_functional_chain`` (l-infinity model) keeps, for every cover center,
the signed coordinate functional at its largest coordinate.  Such a
functional has dual norm 1 and is at least ``2**-(j+3)`` on every point of
the layer it was built for.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .covering import HomogeneityFit, greedy_cover
from .errors import InequalityViolation, ValidationError
from .geometry import NormTag, PointSet

DROP_TOL = 1e-10


def _orthogonalize(vectors, basis, tol=DROP_TOL):
    """Gram-Schmidt of ``vectors`` against ``basis`` and each other, done twice.

    Returns the new orthonormal rows; numerically dependent vectors are
    dropped when their residual falls below ``tol`` times their norm.
    """
    new = []
    Q = basis
    for v in vectors:
        scale = np.linalg.norm(v)
        if scale == 0:
            continue
        w = v / scale
        for _ in range(2):
            if len(Q):
                w = w - Q.T @ (Q @ w)
            if new:
                N = np.asarray(new)
                w = w - N.T @ (N @ w)
        res = np.linalg.norm(w)
        if res <= tol:
            continue
        new.append(w / res)
    dim = basis.shape[1]
    return np.asarray(new).reshape(-1, dim)


@dataclass
class OrthoChain:
    bases: dict
    dims: dict
    M_prime: int
    dim: int
    centers: dict = field(default_factory=dict)

    def stacked(self, n=None):
        """Orthonormal rows spanning the blocks with index ``<= n``."""
        blocks = [self.bases[j] for j in sorted(self.bases) if n is None or j <= n]
        if not blocks:
            return np.zeros((0, self.dim))
        return np.vstack(blocks)

    def gram_drift(self):
        Q = self.stacked()
        if len(Q) == 0:
            return 0.0
        return float(np.max(np.abs(Q @ Q.T - np.eye(len(Q)))))

    def to_dict(self):
        return {
            "kind": "orthogonal",
            "dim": self.dim,
            "M_prime": self.M_prime,
            "layers": [
                {"j": j, "basis": self.bases[j].tolist(), "centers": self.centers.get(j, np.zeros((0, self.dim))).tolist()}
                for j in sorted(self.bases)
            ],
        }

    @classmethod
    def from_dict(cls, data):
        dim = int(data["dim"])
        bases, centers = {}, {}
        for layer in data["layers"]:
            j = int(layer["j"])
            bases[j] = np.asarray(layer["basis"], dtype=float).reshape(-1, dim)
            centers[j] = np.asarray(layer.get("centers", []), dtype=float).reshape(-1, dim)
        dims = {j: len(b) for j, b in bases.items()}
        return cls(bases=bases, dims=dims, M_prime=int(data["M_prime"]), dim=dim, centers=centers)


def m_prime_from_fit(fit):
    """Bound ``4**s * M`` on the number of cover centers per layer."""
    return int(math.ceil(4**fit.s_hom_hat * fit.M_hat - 1e-9))


def project(chain, n, z):
    """Orthogonal projection of ``z`` onto the blocks ``V_j`` with ``j <= n``."""
    z = np.asarray(z, dtype=float)
    if z.shape[-1] != chain.dim:
        raise ValidationError(f"point has dimension {z.shape[-1]}, chain has {chain.dim}")
    Q = chain.stacked(n)
    return (z @ Q.T) @ Q


def build_orthogonal_chain(layers, fit=None, check=True):
    """Orthogonal chain ``V_j`` for an l2 layer decomposition.

    Parameters
    ----------
    layers : LayerDecomposition
    fit : HomogeneityFit, optional
        When given, ``M_prime`` is taken from it; otherwise it is the largest
        number of cover centers in any layer.
    check : bool
        Verify ``|Pi_n z| >= 2**-(n+2)`` for every stored point.
    """
    if layers.norm is not NormTag.L2:
        raise ValidationError("orthogonal chains need an l2 point set")
    basis = np.zeros((0, layers.dim))
    bases, dims, centers = {}, {}, {}
    for j in layers:
        cover = greedy_cover(PointSet(layers.layers[j], NormTag.L2), 2.0 ** -(j + 2))
        V = _orthogonalize(cover.centers, basis)
        bases[j] = V
        dims[j] = len(V)
        centers[j] = cover.centers
        basis = np.vstack([basis, V])
        if check:
            Z = layers.layers[j]
            proj = np.linalg.norm(Z @ basis.T, axis=1)
            bad = np.flatnonzero(proj < 2.0 ** -(j + 2))
            if len(bad):
                raise InequalityViolation(
                    f"layer {j}: projection norm {proj[bad[0]]!r} < 2^-{j + 2} for point "
                    f"{Z[bad[0]].tolist()} (rank drop tolerance {DROP_TOL} too coarse?)"
                )
    if isinstance(fit, HomogeneityFit):
        M_prime = m_prime_from_fit(fit)
    else:
        M_prime = max((len(c) for c in centers.values()), default=0)
    return OrthoChain(bases=bases, dims=dims, M_prime=M_prime, dim=layers.dim, centers=centers)


@dataclass
class FunctionalChain:
    """Signed coordinate functionals per layer, ``(sign, index)`` pairs."""

    functionals: dict
    dims: dict
    M_prime: int
    dim: int

    def matrix(self, j):
        """Rows are the stored functionals of layer ``j`` as vectors in R^D."""
        rows = np.zeros((len(self.functionals[j]), self.dim))
        for k, (sign, i) in enumerate(self.functionals[j]):
            rows[k, i] = sign
        return rows

    def basis(self, j):
        """One signed coordinate functional per distinct coordinate of layer ``j``."""
        seen, rows = set(), []
        for sign, i in self.functionals[j]:
            if i in seen:
                continue
            seen.add(i)
            row = np.zeros(self.dim)
            row[i] = sign
            rows.append(row)
        return np.asarray(rows).reshape(-1, self.dim)

    def best_value(self, j, Z):
        """``max_psi |psi(z)|`` over the layer's functionals for each row of ``Z``."""
        return np.max(np.abs(np.asarray(Z) @ self.matrix(j).T), axis=1)

    def to_dict(self):
        return {
            "kind": "functional",
            "dim": self.dim,
            "M_prime": self.M_prime,
            "layers": [
                {"j": j, "functionals": [[int(s), int(i)] for s, i in self.functionals[j]]}
                for j in sorted(self.functionals)
            ],
        }

    @classmethod
    def from_dict(cls, data):
        funcs = {int(L["j"]): [(int(s), int(i)) for s, i in L["functionals"]] for L in data["layers"]}
        dims = {j: len({i for _, i in f}) for j, f in funcs.items()}
        return cls(functionals=funcs, dims=dims, M_prime=int(data["M_prime"]), dim=int(data["dim"]))


def norming_functional(u):
    """``(sign, index)`` of the coordinate where ``|u_i|`` is largest (lowest index on ties)."""
    u = np.asarray(u, dtype=float)
    i = int(np.argmax(np.abs(u)))
    return (1 if u[i] >= 0 else -1), i


def build_functional_chain(layers, fit=None, check=True):
    """Norming-functional chain for an l-infinity layer decomposition."""
    if layers.norm is not NormTag.LINF:
        raise ValidationError("functional chains need an l-infinity point set")
    funcs, dims = {}, {}
    for j in layers:
        Z = layers.layers[j]
        cover = greedy_cover(PointSet(Z, NormTag.LINF), 2.0 ** -(j + 2))
        chosen = []
        for u in cover.centers:
            f = norming_functional(u)
            if f not in chosen:
                chosen.append(f)
        funcs[j] = chosen
        dims[j] = len({i for _, i in chosen})
    chain = FunctionalChain(functionals=funcs, dims=dims, M_prime=0, dim=layers.dim)
    if check:
        for j in layers:
            Z = layers.layers[j]
            vals = chain.best_value(j, Z)
            bad = np.flatnonzero(vals < 2.0 ** -(j + 3))
            if len(bad):
                raise InequalityViolation(
                    f"layer {j}: no stored functional reaches 2^-{j + 3} at z={Z[bad[0]].tolist()}"
                )
    if isinstance(fit, HomogeneityFit):
        chain.M_prime = m_prime_from_fit(fit)
    else:
        chain.M_prime = max(dims.values(), default=0)
    return chain
