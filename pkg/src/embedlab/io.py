"""Reading and writing point sets, chains, probe maps and tables."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .chain import FunctionalChain, OrthoChain
from .errors import ValidationError
from .geometry import PointSet
from .probe import ProbeConfig, ProbeMap


def to_builtin(obj):
    """Recursively convert numpy scalars/arrays so ``json`` can encode them."""
    if isinstance(obj, dict):
        return {str(k): to_builtin(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_builtin(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_builtin(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def dumps(obj):
    return json.dumps(to_builtin(obj), indent=2, sort_keys=True) + "\n"


def write_json(path, obj):
    Path(path).write_text(dumps(obj))


def read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from None


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    return str(v)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])


def save_pointset_csv(P, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for p in P.points:
            w.writerow([repr(float(v)) for v in p])


def load_pointset_csv(path, norm="l2", label=None):
    rows = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].startswith("#"):
                continue
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                if rows:
                    raise ValidationError(f"{path}: non-numeric row {row}") from None
                # header line
                continue
    if len({len(r) for r in rows}) > 1:
        raise ValidationError(f"{path}: rows have different lengths")
    return PointSet(np.array(rows), norm, label if label is not None else Path(path).stem)


def pointset_to_dict(P):
    return {"label": P.label, "norm": P.norm.value, "points": P.points.tolist()}


def pointset_from_dict(data):
    try:
        return PointSet(np.asarray(data["points"], dtype=float), data.get("norm", "l2"), data.get("label", ""))
    except KeyError as exc:
        raise ValidationError(f"point set JSON is missing {exc}") from None


def save_pointset_json(P, path):
    write_json(path, pointset_to_dict(P))


def load_pointset_json(path):
    return pointset_from_dict(read_json(path))


def load_pointset(path, norm=None):
    """Load CSV or JSON by extension; ``norm`` overrides the stored tag."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        P = load_pointset_json(path)
        return P.with_norm(norm) if norm else P
    return load_pointset_csv(path, norm or "l2")


def chain_from_dict(data):
    kind = data.get("kind")
    if kind == "orthogonal":
        return OrthoChain.from_dict(data)
    if kind == "functional":
        return FunctionalChain.from_dict(data)
    raise ValidationError(f"unknown chain kind {kind!r}")


def save_chain(chain, path):
    write_json(path, chain.to_dict())


def load_chain(path):
    return chain_from_dict(read_json(path))


def save_probe_map(L, path):
    """Write ``<path>.json`` (metadata) and ``<path>.npy`` (the matrix)."""
    path = Path(path)
    stem = path.with_suffix("")
    np.save(stem.with_suffix(".npy"), L.matrix)
    meta = {
        "config": L.config.to_dict(),
        "shape": list(L.matrix.shape),
        "matrix_file": stem.with_suffix(".npy").name,
        "truncation": L.truncation,
        "phis": [{"n": n, "j": j, "coeffs": c.tolist()} for (n, j), c in sorted(L.phis.items())],
    }
    write_json(stem.with_suffix(".json"), meta)


def load_probe_map(path):
    path = Path(path)
    stem = path.with_suffix("")
    meta = read_json(stem.with_suffix(".json"))
    matrix = np.load(stem.parent / meta["matrix_file"])
    cfg = ProbeConfig(**meta["config"])
    phis = {(int(e["n"]), int(e["j"])): np.asarray(e["coeffs"]) for e in meta.get("phis", [])}
    return ProbeMap(matrix=matrix, config=cfg, phis=phis, truncation=meta.get("truncation", {}))
