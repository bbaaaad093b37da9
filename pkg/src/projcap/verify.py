"""Acceptance suite: one function per criterion, each returning (passed, details).

Details hold only seed-determined numbers so that two runs can be compared
byte for byte; wall-clock times are kept apart.
"""
import math
import os
import time
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from . import geometry as geo
from .capacity import disk_example, duality_check, equilibrium_solve, volume_bound_check
from .chebyshev import chebyshev_superadditivity_check, theta_vs_chebyshev
from .evans import evans_construct, offset_grid
from .fekete import MONOTONE_SLACK, transfinite_estimate
from .io import dumps
from .measures import (
    DiscreteMeasure,
    fs_rows,
    fs_sampler,
    mc_energy,
    polarization_residual,
    potential,
    potential_from_growth,
)
from .parallel import ENV_VAR
from .sets import ball, full_space, seqlimit

P1_CENTER = np.array([1.0, 0.0], dtype=np.complex128)


def c1_fs_energy():
    out = {}
    ok = True
    for n, target in ((1, 0.5), (2, 0.25)):
        est = mc_energy(fs_sampler(n), 1_000_000, seed=1)
        out[f"P{n}"] = {"value": est.value, "stderr": est.stderr}
        ok &= abs(est.value - target) <= 0.01
    return ok, out


def _p1_equilibrium():
    return equilibrium_solve(full_space(1), 400, seed=0)


def c2_capacity_p1():
    r = _p1_equilibrium()
    ok = 0.586 <= r.kappa_hat <= 0.627 and r.fw_gap <= 1e-8
    return ok, {"gamma_hat": r.gamma_hat, "kappa_hat": r.kappa_hat, "fw_gap": r.fw_gap, "iterations": r.iterations}


def c3_transfinite_p1():
    kappa = _p1_equilibrium().kappa_hat
    tab = transfinite_estimate(full_space(1), range(2, 51), kappa_hat=kappa, seed=0)
    D = {s: d for s, _, d in tab.rows}
    rel = abs(D[50] - kappa) / kappa
    ok = (abs(D[2] - 1.0) <= 1e-6 and abs(D[3] - 0.8660) <= 1e-3 and abs(D[4] - 0.8165) <= 1e-3
          and not tab.violations and rel <= 0.05)
    return ok, {"D2": D[2], "D3": D[3], "D4": D[4], "D50": D[50], "kappa_hat": kappa, "rel_gap_D50": rel,
                "limit": tab.limit, "violations": tab.violations, "slack": MONOTONE_SLACK}


def c4_chart_consistency():
    """G(lift z, lift w) against N(z, w) for affine pairs of every chart."""
    rng = np.random.default_rng([4, 0])
    worst = {}
    ok = True
    for n in (1, 2, 3):
        for j in range(n + 1):
            # affine coordinates of FS points, so pairs spread over the whole chart
            X = fs_rows(rng, n, 20_000)
            X = X / X[:, j:j + 1]
            Z = np.delete(X, j, axis=1)
            Z1, Z2 = Z[:10_000], Z[10_000:]
            L1 = geo.normalize_rows(np.insert(Z1, j, 1.0, axis=1))
            L2 = geo.normalize_rows(np.insert(Z2, j, 1.0, axis=1))
            G = np.array([geo.kernel_G(geo.ProjectivePoint(p), geo.ProjectivePoint(q)) for p, q in zip(L1, L2)])
            err = float(np.max(np.abs(G - geo.normalized_kernel_values(Z1, Z2))))
            worst[f"n{n}_chart{j}"] = err
            ok &= err < 1e-12
    return ok, worst


def c5_polarization():
    rng = np.random.default_rng([5, 0])
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 4))
        ka, kb = rng.integers(1, 8, size=2)
        X = fs_rows(rng, n, int(ka + kb))
        mu = DiscreteMeasure(X[:ka], rng.random(ka))
        nu = DiscreteMeasure(X[ka:], rng.random(kb))
        worst = max(worst, polarization_residual(mu, nu))
    return worst < 1e-10, {"max_residual": worst}


def c6_duality():
    r = _p1_equilibrium()
    d = duality_check(full_space(1), r, n_trials=50, seed=0)
    ok = d["equality_ok"] and d["inequality_ok"] and d["n_checked"] == 50
    return ok, {"I_star": d["I_star"], "mass_star": d["mass_star"], "mass_bound": d["mass_bound"],
                "max_trial_mass": d["max_mass"], "n_checked": d["n_checked"]}


def _theta_m_sets():
    return [full_space(1), ball(P1_CENTER, 0.3), ball(P1_CENTER, 0.6)]


def c7_theta_vs_m():
    out = {}
    ok = True
    for E in _theta_m_sets():
        for s in range(2, 7):
            r = theta_vs_chebyshev(E, s, seed=0)
            out[f"{E.label} s={s}"] = {"theta": r["theta_s"], "M": r["M_s"], "gap": r["gap"], "eps": r["eps"]}
            ok &= r["ok"]
        for s, t in ((1, 1), (2, 2)):
            r = chebyshev_superadditivity_check(E, s, t, seed=0)
            out[f"{E.label} ({s},{t})"] = {"residual": r["residual"], "eps": r["eps"]}
            ok &= r["ok"]
    return ok, out


def c8_layer_cake():
    rng = np.random.default_rng([8, 0])
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 4))
        mu = DiscreteMeasure(fs_rows(rng, n, 50), rng.dirichlet(np.ones(50)))
        z = geo.ProjectivePoint(fs_rows(rng, n, 1)[0])
        direct = potential(mu, z)
        layered = potential_from_growth(mu, z)
        worst = max(worst, abs(layered + direct) / abs(direct))
    return worst < 0.01, {"max_rel_error": worst}


def c9_volume_bound():
    out = {}
    ok = True
    for E in (full_space(1), ball(P1_CENTER, 0.5), ball(P1_CENTER, 0.9)):
        r = volume_bound_check(E, m=400, N=200_000, seed=0)
        out[E.label] = {k: r[k] for k in ("volume", "bound", "stderr", "stderr_volume", "volume_only_ok")}
        ok &= r["ok"]
    return ok, out


def c10_evans():
    E = seqlimit(19)
    grid = offset_grid(E, size=500, seed=0)
    mu, cert = evans_construct(E, H=10, grid=grid, seed=0)
    levels_ok = all(lv["bound"] <= -(2.0**lv["h"]) for lv in cert.levels)
    nonatom_ok = cert.onset_nonatom_max is None or cert.onset_nonatom_max <= -10 * math.log(2)
    margin_ok = math.isfinite(cert.off_set_margin)
    return levels_ok and nonatom_ok and margin_ok and cert.grid_size == 500, {
        "levels": cert.levels, "off_set_margin": cert.off_set_margin,
        "nonatom_points": cert.onset_nonatom_count, "nonatom_max": cert.onset_nonatom_max,
        "atom_points": cert.onset_atom_count, "raw_mass": cert.raw_mass,
    }


def c11_disk():
    r = disk_example(m=400, N=100_000, seed=0)
    return r["ok"], {k: r[k] for k in ("I_N", "se_N", "I_4N", "se_4N", "kappa_hat", "gamma_hat")}


@dataclass
class Criterion:
    number: int
    title: str
    fn: callable = field(repr=False)
    budget_s: float


CRITERIA = {
    1: Criterion(1, "FS energy oracle", c1_fs_energy, 60.0),
    2: Criterion(2, "capacity of P^1", c2_capacity_p1, 60.0),
    3: Criterion(3, "transfinite diameter table on P^1", c3_transfinite_p1, 300.0),
    4: Criterion(4, "chart consistency", c4_chart_consistency, 5.0),
    5: Criterion(5, "polarization identity", c5_polarization, 5.0),
    6: Criterion(6, "duality", c6_duality, 60.0),
    7: Criterion(7, "theta_s <= M_s and superadditivity", c7_theta_vs_m, 300.0),
    8: Criterion(8, "layer-cake potential", c8_layer_cake, 10.0),
    9: Criterion(9, "volume bound", c9_volume_bound, 60.0),
    10: Criterion(10, "Evans construction", c10_evans, 120.0),
    11: Criterion(11, "disk slice example", c11_disk, 120.0),
}
DETERMINISM = 12

SUITES = {
    "p1-oracles": [2, 3, 7],
    "quick": [4, 5, 8],
    "all": list(range(1, 13)),
}


@dataclass
class Outcome:
    number: int
    title: str
    passed: bool
    seconds: float
    details: dict

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"criterion {self.number:>2} {status}  {self.title}  ({self.seconds:.1f}s)"


@contextmanager
def threads(k):
    old = os.environ.get(ENV_VAR)
    os.environ[ENV_VAR] = str(k)
    try:
        yield
    finally:
        if old is None:
            os.environ.pop(ENV_VAR, None)
        else:
            os.environ[ENV_VAR] = old


def run_criterion(k):
    c = CRITERIA[k]
    t0 = time.perf_counter()
    passed, details = c.fn()
    secs = time.perf_counter() - t0
    return Outcome(k, c.title, bool(passed) and secs <= c.budget_s, secs, details)


def fingerprint(outcome):
    """Serialized numeric content of an outcome, timing excluded."""
    return dumps({"number": outcome.number, "passed_numeric": outcome.details})


def run_suite(numbers, report=print):
    """Run the given criteria; 12 reruns the others under 1 and 4 threads and compares."""
    numbers = sorted(set(numbers))
    base = [k for k in numbers if k != DETERMINISM]
    outcomes = []
    if DETERMINISM in numbers:
        with threads(1):
            first = {k: run_criterion(k) for k in base}
        with threads(4):
            for k in base:
                o = run_criterion(k)
                outcomes.append(o)
                report(o.line())
        t0 = time.perf_counter()
        same = {k: fingerprint(first[k]) == fingerprint(o) for k, o in zip(base, outcomes)}
        o = Outcome(DETERMINISM, "determinism across thread counts", all(same.values()),
                    time.perf_counter() - t0 + sum(first[k].seconds for k in base),
                    {"identical": {str(k): v for k, v in same.items()}})
        outcomes.append(o)
        report(o.line())
    else:
        for k in base:
            o = run_criterion(k)
            outcomes.append(o)
            report(o.line())
    return outcomes
