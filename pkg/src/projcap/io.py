"""JSON and CSV formats shared by the command line and downstream tools."""
import csv
import io
import json
import math

import numpy as np

from . import geometry as geo
from .measures import DiscreteMeasure

FEKETE_COLUMNS = ("s", "theta_s", "D_s", "restarts", "sweeps", "wall_ms")
CHEBYSHEV_COLUMNS = ("s", "M_s", "theta_s", "gap", "pools", "wall_ms")
CAPACITY_COLUMNS = ("label", "m", "gamma_hat", "kappa_hat", "fw_gap", "diag_rule", "cross_gap")


def points_to_json(X):
    """Point-set format: a list of {"re": [...], "im": [...]} with n+1 entries each."""
    X = geo.as_coords(X)
    return [{"re": row.real.tolist(), "im": row.imag.tolist()} for row in X]


def points_from_json(data):
    """Parse the point-set format; rows are normalized on load."""
    if not isinstance(data, list) or not data:
        raise ValueError("point set must be a nonempty JSON array")
    rows = []
    for item in data:
        re_, im_ = item["re"], item.get("im", [0.0] * len(item["re"]))
        if len(re_) != len(im_):
            raise ValueError("re and im must have the same length")
        rows.append(np.asarray(re_, dtype=float) + 1j * np.asarray(im_, dtype=float))
    if len({r.size for r in rows}) != 1:
        raise geo.DimensionMismatch("points of different dimensions")
    return geo.normalize_rows(np.array(rows))


def measure_to_json(mu):
    """{"n", "atoms": one [[re...], [im...]] pair per atom, "weights"}."""
    return {"n": mu.n,
            "atoms": [[a.real.tolist(), a.imag.tolist()] for a in mu.atoms],
            "weights": mu.weights.tolist()}


def measure_from_json(data):
    n = int(data["n"])
    atoms = np.array([np.asarray(re_, float) + 1j * np.asarray(im_, float) for re_, im_ in data["atoms"]])
    if atoms.ndim != 2 or atoms.shape[1] != n + 1:
        raise geo.DimensionMismatch(f"atoms do not live in P^{n}")
    return DiscreteMeasure(geo.normalize_rows(atoms), data["weights"])


def _finite(x):
    """JSON has no infinities; encode them as strings."""
    if isinstance(x, float):
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        if math.isnan(x):
            return "nan"
    if isinstance(x, dict):
        return {k: _finite(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_finite(v) for v in x]
    if isinstance(x, np.generic):
        return _finite(x.item())
    return x


def dumps(obj):
    return json.dumps(_finite(obj), indent=2, sort_keys=False, allow_nan=False)


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def csv_text(columns, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_csv_cell(r[c]) for c in columns])
    return buf.getvalue()


def _csv_cell(v):
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else ("inf" if v > 0 else ("-inf" if v < 0 else "nan"))
    return v
