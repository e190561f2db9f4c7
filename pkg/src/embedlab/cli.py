"""Command line entry point: ``embedlab <command> ...``.

Exit status is 0 on success, 2 on invalid input and 3 when one of the
checked inequalities fails.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .chain import build_functional_chain, build_orthogonal_chain
from .covering import assouad_estimate, dyadic_scale_grid
from .cube_slice import SliceQuery, slab_volume_exact, slab_volume_mc
from .errors import InequalityViolation, QuadratureError, ValidationError
from .fixtures import generate_fixture
from .geometry import NormTag, difference_set, dyadic_layers, layer_index, normalize_diameter
from .harness import ExperimentConfig, run_experiment, run_on_points
from .io import load_chain, load_pointset, save_probe_map, write_csv, write_json
from .probe import ProbeConfig, mu_bound_mc, sample_probe_map

EXIT_OK, EXIT_INVALID, EXIT_INEQUALITY, EXIT_NUMERIC = 0, 2, 3, 1


def _parse_value(text):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def _params(pairs):
    out = {}
    for item in pairs or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ValidationError(f"--param expects key=value, got {item!r}")
        out[key] = _parse_value(value)
    return out


def _floats(text, what):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ValidationError(f"{what}: expected comma-separated numbers, got {text!r}") from None


def _scale_grid(text):
    if not text:
        return dyadic_scale_grid()
    grid = []
    for item in text.split(","):
        r, sep, rho = item.partition(":")
        if not sep:
            raise ValidationError(f"--scale-grid expects r:rho pairs, got {item!r}")
        grid.append((float(r), float(rho)))
    return grid


def _out(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _points(args):
    if args.fixture:
        P = generate_fixture(args.fixture, _params(args.param), args.seed)
    elif args.points:
        P = load_pointset(args.points)
    else:
        raise ValidationError("give a point file or --fixture")
    P = P.with_norm(args.norm)
    if not args.no_normalize:
        P, _ = normalize_diameter(P)
    return P


def _layers_and_fit(args):
    Z = difference_set(_points(args))
    layers = dyadic_layers(Z)
    fit = assouad_estimate(Z, _scale_grid(args.scale_grid))
    return layers, fit


def _probe_cfg(args, seed=None):
    return ProbeConfig(args.N, args.s_decay, args.mode, J_max=args.J_max, seed=args.seed if seed is None else seed)


# ---------------------------------------------------------------- commands


def cmd_slice(args):
    rows = []
    with open(args.queries, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].lstrip().startswith("#"):
                continue
            try:
                vals = [float(v) for v in row]
            except ValueError:
                if rows:
                    raise ValidationError(f"{args.queries}: non-numeric row {row}") from None
                continue
            if len(vals) < 3:
                raise ValidationError(f"{args.queries}: need a-vector, y, eps per row")
            rows.append(vals)
    if not rows:
        raise ValidationError(f"{args.queries}: no queries")
    header = ["index", "y", "eps", "value", "method", "stderr", "achieved_tol"]
    if args.samples:
        header += ["mc_value", "mc_stderr"]
    table = []
    for i, vals in enumerate(rows):
        q = SliceQuery(np.array(vals[:-2]), vals[-2], vals[-1])
        res = slab_volume_exact(q)
        line = [i, q.y, q.eps, res.value, res.method, res.stderr, res.achieved_tol]
        if args.samples:
            mc = slab_volume_mc(q, args.samples, [args.seed, i], threads=args.threads)
            line += [mc.value, mc.stderr]
        table.append(line)
        print(f"query {i}: {res.value:.12g} ({res.method})")
    write_csv(_out(args) / "slice.csv", header, table)


def cmd_cover(args):
    _, fit = _layers_and_fit(args)
    out = _out(args)
    write_json(out / "fit.json", fit.to_dict())
    write_csv(out / "fit_loglog.csv", ["log_ratio", "log_count"], fit.loglog_rows())
    print(f"s_hom_hat = {fit.s_hom_hat:.6g}, M_hat = {fit.M_hat:.6g}")


def cmd_chain(args):
    layers, fit = _layers_and_fit(args)
    if layers.norm is NormTag.L2:
        chain = build_orthogonal_chain(layers, fit=fit)
    else:
        chain = build_functional_chain(layers, fit=fit)
    out = _out(args)
    write_json(out / "chain.json", chain.to_dict())
    print(f"chain with {len(chain.dims)} layers, dims {dict(sorted(chain.dims.items()))}, M' = {chain.M_prime}")


def cmd_sample(args):
    chain = load_chain(args.chain)
    out = _out(args)
    for k in range(args.count):
        L = sample_probe_map(chain, _probe_cfg(args, seed=args.seed + k))
        save_probe_map(L, out / f"probe_map_{k:04d}")
    print(f"wrote {args.count} map(s) of shape {args.N}x{chain.dim} to {out}")


def cmd_mubound(args):
    chain = load_chain(args.chain)
    z = np.array(_floats(args.z, "--z"))
    if z.shape != (chain.dim,):
        raise ValidationError(f"--z has {z.size} entries, chain dimension is {chain.dim}")
    norm = NormTag.L2 if hasattr(chain, "bases") else NormTag.LINF
    zn = float(np.linalg.norm(z) if norm is NormTag.L2 else np.abs(z).max())
    if zn == 0:
        raise ValidationError("--z must be nonzero")
    j = int(layer_index(np.array([zn]))[0])
    eps = _floats(args.eps, "--eps") if args.eps else np.logspace(-3, 0, 13)
    res = mu_bound_mc(chain, _probe_cfg(args), None, z, j, eps, args.trials)
    write_csv(
        _out(args) / "mubound.csv", ["eps", "p", "ci_low", "ci_high", "reference"],
        [(r["eps"], r["p"], r["ci_low"], r["ci_high"], r["reference"]) for r in res["rows"]],
    )
    print(f"layer j={j}, C_hat = {res['C_hat']:.6g}")


def _config_from_args(args, generator):
    return ExperimentConfig(
        generator=generator, N=args.N, mode=args.mode, s_decay=args.s_decay,
        gamma=args.gamma if args.gamma == "auto" else float(args.gamma),
        trials=args.trials, seeds=args.seeds, seed=args.seed,
        scale_grid=[list(p) for p in _scale_grid(args.scale_grid)] if args.scale_grid else None,
        normalize=not args.no_normalize, output_dir=args.out,
    )


def cmd_distort(args):
    if args.fixture:
        gen = {"name": args.fixture, "params": _params(args.param)}
        X = generate_fixture(args.fixture, gen["params"], args.seed)
    elif args.points:
        gen = {"name": "file", "params": {"path": str(args.points)}}
        X = load_pointset(args.points)
    else:
        raise ValidationError("give a point file or --fixture")
    cfg = _config_from_args(args, gen)
    m = run_on_points(X, cfg, _out(args), threads=args.threads)
    print(_summary_line(m))


def cmd_experiment(args):
    cfg = ExperimentConfig.load(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    m = run_experiment(cfg, args.out, threads=args.threads)
    print(_summary_line(m))


def _summary_line(m):
    s = m.summary
    return (
        f"config {m.config_hash[:12]}: bilip pass rate {s['bilip_pass_rate']:.3f}, "
        f"median gamma_hat {s['gamma_hat_median']:.4g}, failure tail {s['regime']}"
    )


# ---------------------------------------------------------------- parser


def _add_common(p, seed_default=0):
    p.add_argument("--seed", type=int, default=seed_default, help="root random seed")
    p.add_argument("--out", default="embedlab_out", help="output directory")
    p.add_argument("--threads", type=int, default=1, help="worker threads (speed only)")


def _add_points(p):
    p.add_argument("points", nargs="?", help="point set (.csv rows or .json)")
    p.add_argument("--fixture", help="use a built-in fixture instead of a file")
    p.add_argument("--param", action="append", metavar="KEY=VALUE", help="fixture parameter")
    p.add_argument("--norm", default="l2", choices=["l2", "linf"])
    p.add_argument("--scale-grid", help="comma separated r:rho pairs")
    p.add_argument("--no-normalize", action="store_true", help="do not rescale to diameter 1")


def _add_probe(p):
    p.add_argument("--N", type=int, required=True, help="target dimension")
    p.add_argument("--s-decay", type=float, required=True)
    p.add_argument("--mode", default="hilbert", choices=["hilbert", "banach"])
    p.add_argument("--J-max", type=int, default=None, help="truncate the chain at this layer")


def build_parser():
    parser = argparse.ArgumentParser(prog="embedlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"embedlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("slice", help="slab volumes of the unit cube")
    p.add_argument("queries", help="CSV rows: a_1,...,a_D,y,eps")
    p.add_argument("--samples", type=int, default=0, help="also estimate by Monte Carlo")
    _add_common(p)
    p.set_defaults(func=cmd_slice)

    p = sub.add_parser("cover", help="homogeneity fit of X-X")
    _add_points(p)
    _add_common(p)
    p.set_defaults(func=cmd_cover)

    p = sub.add_parser("chain", help="build the subspace chain of X-X")
    _add_points(p)
    _add_common(p)
    p.set_defaults(func=cmd_chain)

    p = sub.add_parser("sample", help="sample probe maps from a chain")
    p.add_argument("chain", help="chain JSON")
    _add_probe(p)
    p.add_argument("--count", type=int, default=1)
    _add_common(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("mubound", help="small-ball probability of L z")
    p.add_argument("chain", help="chain JSON")
    p.add_argument("--z", required=True, help="comma separated coordinates")
    p.add_argument("--eps", help="comma separated eps grid")
    p.add_argument("--trials", type=int, default=100_000)
    _add_probe(p)
    _add_common(p)
    p.set_defaults(func=cmd_mubound)

    p = sub.add_parser("distort", help="distortion profile and failure analysis")
    _add_points(p)
    _add_probe(p)
    p.add_argument("--gamma", default="auto")
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--trials", type=int, default=2000)
    _add_common(p)
    p.set_defaults(func=cmd_distort)

    p = sub.add_parser("experiment", help="config-driven runs")
    esub = p.add_subparsers(dest="action", required=True)
    q = esub.add_parser("run", help="run one JSON config")
    q.add_argument("config")
    q.add_argument("--seed", type=int, default=None, help="override the config seed")
    q.add_argument("--out", default=None, help="output directory (overrides config)")
    q.add_argument("--threads", type=int, default=1)
    q.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "threads", 1) < 1:
        parser.error("--threads must be positive")
    try:
        args.func(args)
    except ValidationError as exc:
        print(f"embedlab: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except InequalityViolation as exc:
        print(f"embedlab: inequality check failed: {exc}", file=sys.stderr)
        return EXIT_INEQUALITY
    except QuadratureError as exc:
        print(f"embedlab: quadrature did not converge: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"embedlab: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
