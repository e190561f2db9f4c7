"""Config-driven experiments: fixture -> layers -> fit -> chain -> maps -> reports.

An experiment is described by one JSON file.  Every emitted CSV/JSON file is
a pure function of that file; wall-clock timings go to ``timings.log`` only.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import platform
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .chain import build_functional_chain, build_orthogonal_chain
from .covering import assouad_estimate, dyadic_scale_grid
from .distortion import (
    failure_measure,
    final_constant_check,
    fit_bilip_constants,
    fit_gamma,
    gamma_threshold,
    profile,
    verify_almost_bilip,
)
from .errors import InequalityViolation, ValidationError
from .fixtures import generate_fixture
from .geometry import NormTag, difference_set, dyadic_layers, normalize_diameter
from .io import dumps, save_pointset_csv, write_csv, write_json
from .probe import Mode, ProbeConfig, mu_bound_mc, sample_probe_map, truncation_report
from .plots import loglog_svg

OUT_ENV = "EMBEDLAB_OUT"


@dataclass
class ExperimentConfig:
    generator: dict
    N: int
    mode: str = "hilbert"
    s_decay: float = 0.6
    gamma: float | str = "auto"
    gamma_margin: float = 0.1
    d_margin: float = 0.1
    D: int | None = None
    scale_grid: list | None = None
    trials: int = 2000
    seeds: int | list = 20
    seed: int = 0
    normalize: bool = True
    j_check: int = 20
    output_dir: str = "out"

    def __post_init__(self):
        if not isinstance(self.generator, dict) or "name" not in self.generator:
            raise ValidationError("generator must be an object with a 'name'")
        self.generator = {"name": self.generator["name"], "params": dict(self.generator.get("params", {}))}
        self.N = int(self.N)
        self.mode = Mode.parse(self.mode).value
        # convergence conditions are checked here so bad configs fail before any work
        ProbeConfig(self.N, self.s_decay, self.mode)
        if not (self.gamma == "auto" or isinstance(self.gamma, (int, float))):
            raise ValidationError("gamma must be a number or 'auto'")
        if self.trials < 1:
            raise ValidationError("trials must be positive")
        if isinstance(self.seeds, int) and self.seeds < 1:
            raise ValidationError("seeds must be positive")
        if self.scale_grid is not None:
            self.scale_grid = [[float(r), float(p)] for r, p in self.scale_grid]

    @property
    def seed_list(self):
        if isinstance(self.seeds, int):
            return [self.seed + k for k in range(self.seeds)]
        return [int(s) for s in self.seeds]

    @property
    def norm(self):
        return NormTag.L2 if self.mode == Mode.HILBERT.value else NormTag.LINF

    def to_dict(self):
        return asdict(self)

    def hash(self):
        body = {k: v for k, v in self.to_dict().items() if k != "output_dir"}
        return hashlib.sha256(json.dumps(body, sort_keys=True).encode()).hexdigest()

    @classmethod
    def from_dict(cls, data):
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ValidationError(str(exc)) from None

    @classmethod
    def load(cls, path):
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read config {path}: {exc}") from None
        return cls.from_dict(data)


@dataclass
class RunManifest:
    config_hash: str
    versions: dict
    constants: dict
    truncation: dict
    summary: dict
    artifacts: list
    timings: dict = field(default_factory=dict)

    def to_dict(self):
        # timings are excluded so that manifest.json is reproducible byte for byte
        return {
            "config_hash": self.config_hash,
            "versions": self.versions,
            "constants": self.constants,
            "truncation": self.truncation,
            "summary": self.summary,
            "artifacts": self.artifacts,
        }


def _const(value, source, note=""):
    entry = {"value": value, "source": source}
    if note:
        entry["note"] = note
    return entry


def _per_seed(chain, cfg, layers, X, Z, gamma, seed):
    L = sample_probe_map(chain, ProbeConfig(cfg.N, cfg.s_decay, cfg.mode, seed=seed))
    prof = profile(L, layers)
    # exponent fitted on layers 1..J for growing J
    js = [j for j in layers if j >= 1]
    trend = {J: fit_gamma(prof.ratios, range(1, J + 1))[0] for J in js if J >= 3}
    c_L, rho_L = fit_bilip_constants(L, layers, gamma)
    check = verify_almost_bilip(L, X, gamma, c_L, rho_L)
    fails = [j for j in layers if j >= 1 and prof.ratios[j] < j**-gamma]
    js = [j for j in layers if j >= 1]
    j_L = max(fails) + 1 if fails else min(js)
    log_ok = final_constant_check(L, Z, gamma, j_L)
    if not log_ok:
        # the layer predicate beyond j_L implies the bound; failure means a bug
        raise InequalityViolation(f"seed {seed}: layer predicate held from j_L={j_L} but the log bound failed")
    return {
        "seed": seed, "gamma_hat": prof.gamma_hat, "c_fit": prof.c_fit, "K": prof.K,
        "c_L": c_L, "rho_L": rho_L, "bilip_ok": check.ok, "bilip_side": check.side,
        "j_L": j_L, "log_bound_ok": log_ok, "ratios": prof.ratios, "trend": trend,
    }


def run_experiment(cfg, out_dir=None, threads=1):
    """Run the full pipeline for ``cfg`` and write its artifacts.

    Returns the :class:`RunManifest`.  ``threads`` only changes speed.
    """
    X = generate_fixture(cfg.generator["name"], cfg.generator["params"], cfg.seed)
    return run_on_points(X, cfg, out_dir, threads)


def run_on_points(X, cfg, out_dir=None, threads=1):
    """Same pipeline as :func:`run_experiment` on an explicit point set.

    The generator entry of ``cfg`` is only recorded, not used.
    """
    timings = {}
    t0 = time.perf_counter()
    out = Path(out_dir or os.environ.get(OUT_ENV) or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    X = X.with_norm(cfg.norm)
    if cfg.D is not None and X.dim != cfg.D:
        raise ValidationError(f"fixture has dimension {X.dim}, config says D={cfg.D}")
    scale = 1.0
    if cfg.normalize:
        X, scale = normalize_diameter(X)
    Z = difference_set(X)
    layers = dyadic_layers(Z)
    timings["geometry"] = time.perf_counter() - t0

    t = time.perf_counter()
    grid = cfg.scale_grid or dyadic_scale_grid()
    fit = assouad_estimate(Z, grid)
    d_used = fit.s_hom_hat + cfg.d_margin
    if not d_used < cfg.N:
        raise ValidationError(f"fitted dimension {d_used:.4g} is not below N={cfg.N}")
    threshold = gamma_threshold(cfg.s_decay, cfg.N, d_used)
    gamma = threshold + cfg.gamma_margin if cfg.gamma == "auto" else float(cfg.gamma)
    timings["covering"] = time.perf_counter() - t

    t = time.perf_counter()
    if cfg.norm is NormTag.L2:
        chain = build_orthogonal_chain(layers, fit=fit)
    else:
        chain = build_functional_chain(layers, fit=fit)
    timings["chain"] = time.perf_counter() - t

    t = time.perf_counter()
    seeds = cfg.seed_list
    job = lambda sd: _per_seed(chain, cfg, layers, X, Z, gamma, sd)
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(job, seeds))
    else:
        results = [job(sd) for sd in seeds]
    timings["maps"] = time.perf_counter() - t

    t = time.perf_counter()
    base = ProbeConfig(cfg.N, cfg.s_decay, cfg.mode, seed=cfg.seed)
    failure = failure_measure(chain, base, None, layers, gamma, cfg.trials, d_used, threads=threads)
    timings["failure"] = time.perf_counter() - t

    # constant of the small-ball bound, on the first point of the shallowest layer j >= 1
    j1 = min(j for j in layers if j >= 1)
    mu = mu_bound_mc(chain, base, None, layers.layers[j1][0], j1, np.logspace(-3, 0, 13), max(cfg.trials, 1000))

    artifacts = []

    def emit(name):
        artifacts.append(name)
        return out / name

    save_pointset_csv(X, emit("points.csv"))
    write_json(emit("fit.json"), fit.to_dict())
    write_csv(emit("fit_loglog.csv"), ["log_ratio", "log_count"], fit.loglog_rows())
    write_json(emit("chain.json"), chain.to_dict())
    write_csv(
        emit("profile.csv"), ["seed", "j", "ratio", "reference"],
        [(r["seed"], j, r["ratios"][j], (j**-gamma if j >= 1 else math.nan)) for r in results for j in sorted(r["ratios"])],
    )
    seed_cols = ["seed", "gamma_hat", "c_fit", "K", "c_L", "rho_L", "bilip_ok", "bilip_side", "j_L", "log_bound_ok"]
    write_csv(emit("seeds.csv"), seed_cols, [[r[c] for c in seed_cols] for r in results])
    write_json(emit("failure.json"), failure.to_dict())
    write_csv(
        emit("mubound.csv"), ["eps", "p", "ci_low", "ci_high", "reference"],
        [(r["eps"], r["p"], r["ci_low"], r["ci_high"], r["reference"]) for r in mu["rows"]],
    )

    js = sorted(failure.per_j)
    med = {j: float(np.median([r["ratios"][j] for r in results])) for j in sorted(layers) if j >= 1}
    loglog_svg(
        emit("profile.svg"), "median layer ratio", "j", "ratio",
        {"median ratio": (list(med), list(med.values())), "j^-gamma": (list(med), [j**-gamma for j in med])},
    )
    loglog_svg(
        emit("failure.svg"), "failure measure", "j", "mu(Q_j)",
        {"mu_hat": (js, [failure.per_j[j]["mu_hat"] for j in js]),
         "reference": (js, [failure.per_j[j]["reference"] for j in js])},
    )

    gammas = [r["gamma_hat"] for r in results]
    constants = {
        "scale": _const(scale, "fit", "factor applied to reach diameter <= 1"),
        "M_hat": _const(fit.M_hat, "fit"),
        "s_hom_hat": _const(fit.s_hom_hat, "fit"),
        "d_used": _const(d_used, "fit", f"s_hom_hat + {cfg.d_margin}"),
        "M_prime": _const(chain.M_prime, "fit", "ceil(4^s_hom_hat * M_hat)"),
        "gamma_threshold": _const(threshold, "fit"),
        "gamma": _const(gamma, "config" if cfg.gamma != "auto" else "fit"),
        "K": _const(failure.K, "sample", "max operator-norm bound over sampled maps"),
        "C_hat": _const(mu["C_hat"], "sample", f"max p/(eps^N j^(sN)) at layer {j1}"),
        "C_prime": _const(failure.C_prime, "sample"),
        "j_L_histogram": _const({str(k): v for k, v in sorted(failure.j_L_distribution.items())}, "sample"),
        "c_L": _const([r["c_L"] for r in results], "fit", "per seed"),
        "rho_L": _const([r["rho_L"] for r in results], "fit", "per seed"),
        "log_bound_implication": _const(all(r["log_bound_ok"] for r in results), "assertion"),
    }
    summary = {
        "fixture": X.label, "points": len(X), "difference_points": len(Z),
        "layers": {str(j): len(layers.layers[j]) for j in layers}, "zero_vectors": layers.n_zero,
        "chain_dims": {str(j): int(v) for j, v in chain.dims.items()},
        "bilip_pass_rate": float(np.mean([r["bilip_ok"] for r in results])),
        "gamma_hat_median": float(np.median(gammas)),
        "gamma_hat_trend": {str(J): float(np.median([r["trend"][J] for r in results])) for J in results[0]["trend"]},
        "tail_sum": failure.tail_sum, "regime": failure.regime(cfg.j_check),
        "threshold_met": failure.threshold_met, "warnings": failure.warnings,
    }
    versions = {"embedlab": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                "python": platform.python_version()}
    manifest = RunManifest(
        config_hash=cfg.hash(), versions=versions, constants=constants,
        truncation=truncation_report(chain, base), summary=summary,
        artifacts=sorted(artifacts + ["config.json", "manifest.json"]),
    )
    write_json(out / "config.json", cfg.to_dict() | {"output_dir": None})
    (out / "manifest.json").write_text(dumps(manifest.to_dict()))
    timings["total"] = time.perf_counter() - t0
    manifest.timings = timings
    (out / "timings.log").write_text("".join(f"{k}\t{v:.6f}\n" for k, v in timings.items()))
    return manifest
