"""Command line entry point: ``projcap <command> [options]``.

Exit codes: 0 success, 1 numeric failure, 2 usage error.
"""
import argparse
import datetime
import json
import math
import sys

import numpy as np

from . import __version__
from . import geometry as geo
from . import io as pio
from . import sets as S
from .errors import NumericFailure, ProjcapError

COMMANDS = ("kernel", "energy", "fekete", "diameter", "chebyshev", "capacity", "evans", "verify")
SET_NAMES = ("p1", "pn", "fs", "ball", "circle", "finite", "seqlimit", "disk-slice", "union")


class UsageError(Exception):
    pass


def _positive_float(flag):
    def parse(text):
        try:
            v = float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{flag} expects a number, got {text!r}")
        if not (v > 0 and math.isfinite(v)):
            raise argparse.ArgumentTypeError(f"{flag} must be positive, got {text}")
        return v
    return parse


def _int_at_least(flag, low):
    def parse(text):
        try:
            v = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{flag} expects an integer, got {text!r}")
        if v < low:
            raise argparse.ArgumentTypeError(f"{flag} must be at least {low}, got {v}")
        return v
    return parse


def _int_list(text):
    try:
        vals = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"--s-list expects comma separated integers, got {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("--s-list is empty")
    return vals


def build_parser():
    p = argparse.ArgumentParser(prog="projcap", description="Projective logarithmic capacity toolkit.")
    p.add_argument("--version", action="version", version=f"projcap {__version__}")
    sub = p.add_subparsers(dest="command", required=True, metavar="command")

    def common(sp, with_set=True):
        if with_set:
            sp.add_argument("--set", dest="set_name", choices=SET_NAMES, default="p1")
            sp.add_argument("--n", type=_int_at_least("--n", 1), default=None, help="dimension for pn/fs")
            sp.add_argument("--center", help='center point: JSON {"re": [...], "im": [...]} or "x0,x1,..."')
            sp.add_argument("--center-file", help="point-set JSON file; its first point is the center")
            sp.add_argument("--points-file", help="point-set JSON file for the finite set")
            sp.add_argument("--k-max", type=_int_at_least("--k-max", 1), default=19)
            sp.add_argument("--member", action="append", default=[],
                            help='union member as JSON, e.g. {"set": "ball", "center": [1, 0], "radius": 0.3}')
        sp.add_argument("--radius", type=_positive_float("--radius"), default=None)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", default=None, help="output file (default stdout)")
        sp.add_argument("--format", choices=("json", "csv"), default="json")

    k = sub.add_parser("kernel", help="sine distance, geodesic distance and kernel between points")
    k.add_argument("--p", help="first point (JSON object)")
    k.add_argument("--q", help="second point (JSON object)")
    k.add_argument("--points-file", help="point-set JSON; all pairs are reported")
    k.add_argument("--seed", type=int, default=0)
    k.add_argument("--out", default=None)
    k.add_argument("--format", choices=("json", "csv"), default="json")

    e = sub.add_parser("energy", help="Monte-Carlo energy of a sampled measure, or exact energies of a file measure")
    common(e)
    e.add_argument("--N", type=_int_at_least("--N", 2), default=100_000)
    e.add_argument("--measure-file", help="measure JSON; reports its energies instead of sampling")

    f = sub.add_parser("fekete", help="Fekete configurations and the D_s table")
    common(f)
    f.add_argument("--s", type=_int_at_least("--s", 2), default=None)
    f.add_argument("--s-list", type=_int_list, default=None)
    f.add_argument("--restarts", type=_int_at_least("--restarts", 1), default=8)
    f.add_argument("--pool", type=_int_at_least("--pool", 2), default=2000)
    f.add_argument("--tol", type=_positive_float("--tol"), default=1e-9)

    d = sub.add_parser("diameter", help="diameter of order s")
    common(d)
    d.add_argument("--s", type=_int_at_least("--s", 2), required=True)
    d.add_argument("--restarts", type=_int_at_least("--restarts", 1), default=8)
    d.add_argument("--tol", type=_positive_float("--tol"), default=1e-9)

    c = sub.add_parser("chebyshev", help="Chebyshev constants M_s and the comparison with theta_s")
    common(c)
    c.add_argument("--s", type=_int_at_least("--s", 1), default=None)
    c.add_argument("--s-list", type=_int_list, default=None)
    c.add_argument("--tol", type=_positive_float("--tol"), default=1e-4)

    cap = sub.add_parser("capacity", help="Robin constant and capacity from the equilibrium problem")
    common(cap)
    cap.add_argument("--m", type=_int_at_least("--m", 2), default=400)
    cap.add_argument("--tol", type=_positive_float("--tol"), default=1e-8, help="Frank-Wolfe gap tolerance")

    ev = sub.add_parser("evans", help="measure with potential -inf on a finite set, with certificate")
    common(ev)
    ev.add_argument("--H", type=_int_at_least("--H", 1), default=10)
    ev.add_argument("--s-max", type=_int_at_least("--s-max", 1), default=64)

    v = sub.add_parser("verify", help="run acceptance suites")
    v.add_argument("--suite", choices=("p1-oracles", "quick", "all"), default="quick")
    v.add_argument("--criteria", type=_int_list, default=None, help="explicit criterion numbers")
    v.add_argument("--out", default=None)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--format", choices=("json", "csv"), default="json")
    return p


def parse_config(argv):
    """Parsed and validated namespace; raises SystemExit(2) on usage errors."""
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _validate(args)
    except UsageError as exc:
        parser.error(str(exc))
    return args


def _validate(args):
    cmd = args.command
    if cmd in ("fekete", "chebyshev") and args.s is None and args.s_list is None:
        raise UsageError(f"{cmd} needs --s or --s-list")
    if cmd in ("fekete", "chebyshev") and args.s_list is not None:
        low = 2 if cmd == "fekete" else 1
        if any(s < low for s in args.s_list):
            raise UsageError(f"--s-list entries must be at least {low}")
        if any(b <= a for a, b in zip(args.s_list, args.s_list[1:])):
            raise UsageError("--s-list must be strictly increasing")
    if getattr(args, "set_name", None) == "ball" and args.radius is None:
        raise UsageError("--set ball needs --radius")
    if getattr(args, "set_name", None) == "ball" and not (args.center or args.center_file):
        raise UsageError("--set ball needs --center or --center-file")
    if getattr(args, "set_name", None) == "finite" and not args.points_file:
        raise UsageError("--set finite needs --points-file")
    if getattr(args, "set_name", None) == "union" and len(args.member) < 1:
        raise UsageError("--set union needs at least one --member")
    if cmd == "evans" and args.set_name not in ("finite", "seqlimit"):
        raise UsageError("evans needs a finite set (--set finite or --set seqlimit)")
    if cmd == "evans" and args.H > 30:
        raise UsageError("--H must be at most 30")
    if cmd == "kernel" and not args.points_file and not (args.p and args.q):
        raise UsageError("kernel needs --p and --q, or --points-file")


def _parse_point(text):
    text = text.strip()
    if text.startswith("{"):
        return pio.points_from_json([json.loads(text)])[0]
    if text.startswith("["):
        return geo.normalize_rows(np.asarray([json.loads(text)], dtype=np.complex128))[0]
    vals = [complex(x.replace(" ", "").replace("i", "j")) for x in text.split(",")]
    return geo.normalize_rows(np.asarray([vals]))[0]


def _center(args):
    if args.center_file:
        return pio.points_from_json(pio.read_json(args.center_file))[0]
    return _parse_point(args.center)


def _set_from_spec(spec):
    """SetSpec from a JSON member description (used by --member)."""
    name = spec.get("set")
    if name in ("p1",):
        return S.full_space(1)
    if name in ("pn", "fs"):
        return S.full_space(int(spec.get("n", 1)))
    if name == "ball":
        r = float(spec["radius"])
        if not r > 0:
            raise UsageError("member radius must be positive")
        c = spec["center"]
        c = _parse_point(json.dumps(c)) if not isinstance(c, str) else _parse_point(c)
        return S.ball(c, r)
    if name == "circle":
        return S.real_circle()
    if name == "seqlimit":
        return S.seqlimit(int(spec.get("k_max", 19)))
    if name == "disk-slice":
        return S.disk_slice(float(spec.get("radius", 1.0)))
    if name == "finite":
        return S.finite_set(pio.points_from_json(spec["points"]))
    raise UsageError(f"unknown member set {name!r}")


def build_set(args):
    name = args.set_name
    if name == "p1":
        return S.full_space(1)
    if name in ("pn", "fs"):
        return S.full_space(args.n or 1)
    if name == "ball":
        return S.ball(_center(args), args.radius)
    if name == "circle":
        return S.real_circle()
    if name == "finite":
        return S.finite_set(pio.points_from_json(pio.read_json(args.points_file)))
    if name == "seqlimit":
        return S.seqlimit(args.k_max)
    if name == "disk-slice":
        return S.disk_slice(args.radius or 1.0)
    if name == "union":
        members = []
        for text in args.member:
            try:
                members.append(_set_from_spec(json.loads(text)))
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise UsageError(f"bad --member {text!r}: {exc}")
        return S.union(members)
    raise UsageError(f"unknown set {name!r}")


def _config(args):
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("out",)}


def _envelope(args, result):
    return {
        "config": _config(args),
        "version": __version__,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds"),
        "result": result,
    }


def _csv_with_header(args, columns, rows):
    head = (f"# config: {json.dumps(_config(args), sort_keys=True)}\n"
            f"# version: {__version__}\n"
            f"# timestamp: {datetime.datetime.now(datetime.timezone.utc).isoformat(timespec='seconds')}\n")
    return head + pio.csv_text(columns, rows)


def _emit(args, text):
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


# ---------------------------------------------------------------------------
# commands


def cmd_kernel(args):
    if args.points_file:
        X = pio.points_from_json(pio.read_json(args.points_file))
    else:
        X = np.vstack([_parse_point(args.p), _parse_point(args.q)])
    rows = []
    for i in range(X.shape[0]):
        for j in range(i + 1, X.shape[0]):
            p, q = geo.ProjectivePoint(X[i]), geo.ProjectivePoint(X[j])
            rows.append({"i": i, "j": j, "sigma": geo.sine_distance(p, q),
                         "d": geo.geodesic_distance(p, q), "G": geo.kernel_G(p, q)})
    if args.format == "csv":
        return _csv_with_header(args, ("i", "j", "sigma", "d", "G"), rows)
    return pio.dumps(_envelope(args, {"pairs": rows}))


def cmd_energy(args):
    from .measures import MeasureSampler, energy, mc_energy, offdiag_energy

    if args.measure_file:
        mu = pio.measure_from_json(pio.read_json(args.measure_file))
        result = {"energy": energy(mu).to_json(),
                  "offdiag_energy": offdiag_energy(mu) if mu.size > 1 else None}
    else:
        E = build_set(args)
        sampler = MeasureSampler(E.n, E.sample, E.label)
        result = mc_energy(sampler, args.N, args.seed).to_json()
    if args.format == "csv":
        flat = result if "value" in result else result["energy"]
        return _csv_with_header(args, ("value", "stderr", "samples"), [flat])
    return pio.dumps(_envelope(args, result))


def cmd_fekete(args):
    from .fekete import fekete_solve

    E = build_set(args)
    s_list = args.s_list or [args.s]
    cfgs = [fekete_solve(E, s, restarts=args.restarts, pool=args.pool, tol=args.tol, seed=args.seed)
            for s in s_list]
    if args.format == "csv":
        rows = [{"s": c.s, "theta_s": c.theta, "D_s": c.D, "restarts": c.restarts_used, "sweeps": c.sweeps,
                 "wall_ms": round(c.wall_ms, 3)} for c in cfgs]
        return _csv_with_header(args, pio.FEKETE_COLUMNS, rows)
    return pio.dumps(_envelope(args, {"configurations": [c.to_json() for c in cfgs]}))


def cmd_diameter(args):
    from .fekete import fekete_solve

    E = build_set(args)
    c = fekete_solve(E, args.s, restarts=args.restarts, tol=args.tol, seed=args.seed)
    if args.format == "csv":
        return _csv_with_header(args, ("s", "D_s"), [{"s": c.s, "D_s": c.D}])
    return pio.dumps(_envelope(args, {"s": c.s, "D_s": c.D, "theta_s": c.theta}))


def cmd_chebyshev(args):
    from .chebyshev import chebyshev_value
    from .fekete import fekete_solve

    E = build_set(args)
    rows = []
    for s in args.s_list or [args.s]:
        r = chebyshev_value(E, s, tol=args.tol, seed=args.seed)
        theta = fekete_solve(E, s, seed=args.seed).theta if s >= 2 else math.nan
        gap = r.M_s - theta if s >= 2 else math.nan
        rows.append({"s": s, "M_s": r.M_s, "theta_s": theta, "gap": gap, "pools": r.pools,
                     "wall_ms": round(r.wall_ms, 3)})
    if args.format == "csv":
        return _csv_with_header(args, pio.CHEBYSHEV_COLUMNS, rows)
    for r in rows:
        r.pop("wall_ms")
    return pio.dumps(_envelope(args, {"rows": rows}))


def cmd_capacity(args):
    from .capacity import capacity, report_json

    E = build_set(args)
    gamma, kappa, rep = capacity(E, m=args.m, seed=args.seed)
    res = rep["result"]
    if not res.converged or res.fw_gap > args.tol:
        raise NumericFailureWithReport(f"Frank-Wolfe gap {res.fw_gap:.3g} above {args.tol:g}", report_json(rep))
    out = report_json(rep)
    if args.format == "csv":
        out["label"] = E.label
        return _csv_with_header(args, pio.CAPACITY_COLUMNS, [out])
    return pio.dumps(_envelope(args, out))


def cmd_evans(args):
    from .evans import evans_construct

    E = build_set(args)
    mu, cert = evans_construct(E, H=args.H, s_max=args.s_max, seed=args.seed)
    if args.format == "csv":
        rows = [{"h": lv["h"], "s_h": lv["s_h"], "bound": lv["bound"]} for lv in cert.levels]
        return _csv_with_header(args, ("h", "s_h", "bound"), rows)
    return pio.dumps(_envelope(args, {"measure": pio.measure_to_json(mu), "certificate": cert.to_json()}))


def cmd_verify(args):
    from .verify import SUITES, run_suite

    numbers = args.criteria or SUITES[args.suite]
    bad = [k for k in numbers if not 1 <= k <= 12]
    if bad:
        raise UsageError(f"unknown criteria {bad}")
    outcomes = run_suite(numbers, report=lambda line: print(line, flush=True))
    if args.out:
        summary = [{"criterion": o.number, "title": o.title, "passed": o.passed, "details": o.details}
                   for o in outcomes]
        with open(args.out, "w") as fh:
            fh.write(pio.dumps(_envelope(args, summary)) + "\n")
    return None if all(o.passed for o in outcomes) else 1


class NumericFailureWithReport(NumericFailure):
    def __init__(self, message, report):
        super().__init__(message)
        self.report = report


HANDLERS = {
    "kernel": cmd_kernel, "energy": cmd_energy, "fekete": cmd_fekete, "diameter": cmd_diameter,
    "chebyshev": cmd_chebyshev, "capacity": cmd_capacity, "evans": cmd_evans, "verify": cmd_verify,
}


def run(args):
    """Dispatch a parsed config; returns the exit code."""
    try:
        out = HANDLERS[args.command](args)
    except UsageError as exc:
        print(f"projcap: error: {exc}", file=sys.stderr)
        return 2
    except NumericFailure as exc:
        print(f"projcap: numeric failure: {exc}", file=sys.stderr)
        return 1
    except (ProjcapError, ValueError) as exc:
        print(f"projcap: error: {exc}", file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError) as exc:
        print(f"projcap: error: {exc}", file=sys.stderr)
        return 2
    if isinstance(out, int):
        return out
    if out is not None:
        _emit(args, out)
    return 0


def main(argv=None):
    args = parse_config(sys.argv[1:] if argv is None else argv)
    return run(args)


if __name__ == "__main__":
    sys.exit(main())
