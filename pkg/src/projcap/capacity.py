"""Robin constant and capacity from a discretized equilibrium problem.

gamma_hat = min { w^T A w : w in the probability simplex }, where A holds -G
between sampled points of E and a nearest-neighbour self-energy proxy on the
diagonal.  The quadratic program is solved by Frank-Wolfe with away steps.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from . import geometry as geo
from .errors import (
    CoincidentSamples,
    DegenerateGamma,
    NonConvergence,
    TooFewPoints,
)
from .fekete import fekete_solve
from .measures import DiscreteMeasure, chunked_mc, fs_rows
from .parallel import ordered_map
from .sets import disk_slice, distinct_samples, finite_set

DIAG_RULE = "nn-half"
_REFRESH = 256


def diag_label(scale=1.0):
    return DIAG_RULE if scale == 1.0 else f"{DIAG_RULE}*{scale:g}"


def energy_matrix(samples, diag_rule=DIAG_RULE, scale=1.0):
    """A_ij = -G(x_i, x_j) off the diagonal, A_ii = -log(scale * sigma_i / 2).

    sigma_i is the sine distance from x_i to its nearest other sample.
    """
    if diag_rule != DIAG_RULE:
        raise ValueError(f"unknown diag_rule {diag_rule!r}")
    X = geo.as_coords(samples)
    m = X.shape[0]
    if m < 2:
        raise TooFewPoints("energy matrix needs at least two samples")
    S2 = geo.sigma2_matrix(X)
    np.fill_diagonal(S2, np.inf)
    nn2 = S2.min(axis=1)
    if nn2.min() < 1e-24:
        raise CoincidentSamples("two samples closer than sigma = 1e-12")
    np.fill_diagonal(S2, 1.0)
    A = -0.5 * np.log(np.minimum(S2, 1.0))
    A[A == 0.0] = 0.0  # no negative zeros
    np.fill_diagonal(A, -np.log(scale * np.sqrt(np.minimum(nn2, 1.0)) / 2.0))
    return A


@dataclass
class EquilibriumResult:
    samples: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    gamma_hat: float
    kappa_hat: float
    fw_gap: float
    diag_rule: str
    iterations: int = 0
    converged: bool = True
    polar_suspect: bool = False
    diag_share: float = 0.0
    history: list = field(default_factory=list, repr=False)
    scale: float = 1.0

    @property
    def m(self):
        return self.samples.shape[0]

    def measure(self):
        return DiscreteMeasure(self.samples, self.weights)

    def to_json(self):
        return {"gamma_hat": self.gamma_hat, "kappa_hat": self.kappa_hat, "fw_gap": self.fw_gap,
                "m": int(self.m), "diag_rule": self.diag_rule}


def frank_wolfe(A, max_iters=100_000, gap_tol=1e-8, w0=None):
    """Minimize w^T A w over the simplex.

    Returns (w, f, gap, iterations, history).  Each step moves toward the best
    vertex or away from the worst active vertex, whichever direction has the
    larger gap, with exact line search; the tracked objective never increases.
    """
    m = A.shape[0]
    w = np.full(m, 1.0 / m) if w0 is None else np.array(w0, dtype=float)
    Aw = A @ w
    f = float(w @ Aw)
    history = [f]
    diag = np.diag(A).copy()
    it = 0
    gap = math.inf
    while True:
        j = int(np.argmin(Aw))
        gap = 2.0 * (f - Aw[j])
        if gap <= gap_tol or it >= max_iters:
            break
        active = np.nonzero(w > 0)[0]
        a = int(active[np.argmax(Aw[active])])
        away_gap = 2.0 * (Aw[a] - f)
        if gap >= away_gap:
            slope = Aw[j] - f
            curv = diag[j] - 2.0 * Aw[j] + f
            t_max = 1.0
            col = A[:, j]
            t = t_max if curv <= 0 else min(t_max, -slope / curv)
            w *= 1.0 - t
            w[j] += t
            Aw = (1.0 - t) * Aw + t * col
        else:
            wa = w[a]
            t_max = wa / (1.0 - wa) if wa < 1.0 else math.inf
            slope = f - Aw[a]
            curv = f - 2.0 * Aw[a] + diag[a]
            t = t_max if curv <= 0 else min(t_max, -slope / curv)
            w *= 1.0 + t
            w[a] -= t
            if t == t_max:
                w[a] = 0.0
            Aw = (1.0 + t) * Aw - t * A[:, a]
        np.maximum(w, 0.0, out=w)
        it += 1
        if it % _REFRESH == 0:
            w /= math.fsum(w.tolist())
            Aw = A @ w
            f_new = float(w @ Aw)
        else:
            f_new = float(w @ Aw)
        f = min(f, f_new) if f_new > f and f_new - f <= 1e-15 * abs(f) else f_new
        history.append(f)
    w /= math.fsum(w.tolist())
    Aw = A @ w
    f = float(w @ Aw)
    gap = 2.0 * (f - float(Aw.min()))
    return w, f, max(gap, 0.0), it, history


def equilibrium_solve(E, m=400, max_iters=100_000, gap_tol=1e-8, seed=0, diag_rule=DIAG_RULE,
                      scale=1.0, samples=None, strict=False):
    """Discrete equilibrium measure of E on m samples.

    Finite sets use their distinct points.  When the gap tolerance is not met
    the best iterate is returned with ``converged=False``; ``strict`` raises
    NonConvergence instead.
    """
    if samples is None:
        if m < 2:
            raise TooFewPoints("m must be at least 2")
        X = distinct_samples(E, m, np.random.default_rng([seed, 0]))
    else:
        X = geo.as_coords(samples)
    A = energy_matrix(X, diag_rule, scale)
    w, f, gap, it, history = frank_wolfe(A, max_iters, gap_tol)
    converged = gap <= gap_tol
    if strict and not converged:
        raise NonConvergence(f"Frank-Wolfe gap {gap:.3g} after {it} iterations")
    gamma = max(f, 0.0)
    diag_part = float(np.sum(w * w * np.diag(A)))
    share = diag_part / gamma if gamma > 0 else 1.0
    return EquilibriumResult(
        samples=X, weights=w, gamma_hat=gamma, kappa_hat=math.exp(-gamma), fw_gap=gap,
        diag_rule=diag_label(scale), iterations=it, converged=converged,
        polar_suspect=bool(E is not None and E.is_finite) or share > 0.5,
        diag_share=share, history=history, scale=scale,
    )


def _inv_sqrt_sd(gamma, dgamma):
    """Standard deviation of 1/sqrt(gamma) propagated from that of gamma."""
    return 0.5 * gamma**-1.5 * dgamma


def capacity(E, m=400, seed=0, refine=True, fekete_s=None, fekete_opts=None):
    """(gamma_hat, kappa_hat, report) from the equilibrium route, cross-checked.

    The equilibrium problem is solved at m and 2m samples; the gap between the
    two is reported as ``refine_gap``.  The Fekete route gives D_s for
    s = fekete_s (default min(50, number of points)) and ``cross_gap`` is
    |kappa_hat - D_s|.
    """
    r1 = equilibrium_solve(E, m, seed=seed)
    report = r1.to_json()
    report["result"] = r1
    if refine and not E.is_finite:
        r2 = equilibrium_solve(E, 2 * m, seed=seed)
        report["gamma_2m"] = r2.gamma_hat
        report["refine_gap"] = abs(r2.gamma_hat - r1.gamma_hat)
    else:
        report["gamma_2m"] = None
        report["refine_gap"] = 0.0
    s = fekete_s
    if s is None:
        s = min(50, E.points.shape[0]) if E.is_finite else 50
    if s >= 2:
        cfg = fekete_solve(E, s, seed=seed, **(fekete_opts or {}))
        report["fekete_s"] = s
        report["D_s"] = cfg.D
        report["cross_gap"] = abs(r1.kappa_hat - cfg.D)
    else:
        report["fekete_s"] = None
        report["D_s"] = None
        report["cross_gap"] = None
    if E.diameter is not None:
        report["d2_bound"] = math.sin(min(E.diameter, geo.DIAMETER) / geo.SQRT2)
    report["polar_suspect"] = r1.polar_suspect
    return r1.gamma_hat, r1.kappa_hat, report


def report_json(report):
    """The JSON-safe part of a capacity report."""
    return {k: v for k, v in report.items() if k != "result"}


def _sample_indices(X, Y):
    """Row index in X of each row of Y (rows of Y are rows of X up to phase)."""
    S2 = geo.sigma2_matrix(Y, X)
    return np.argmin(S2, axis=1)


def _trial_weights(result, count, seed):
    """Probability vectors on the equilibrium samples used as duality trials.

    A third are uniform measures on Fekete subsets of the samples, the rest are
    Dirichlet weights on random subsets.
    """
    X = result.samples
    m = X.shape[0]
    rng = np.random.default_rng([seed, 4242])
    out = []
    n_fek = count // 3
    sizes = np.unique(np.linspace(2, max(2, min(40, m)), n_fek).astype(int)) if n_fek else []
    pool = finite_set(X)
    for k in sizes:
        cfg = fekete_solve(pool, int(k), restarts=1, seed=seed, pool=m)
        v = np.zeros(m)
        v[_sample_indices(X, cfg.points)] = 1.0 / k
        out.append(v)
    while len(out) < count:
        k = int(rng.integers(1, m + 1))
        idx = rng.choice(m, k, replace=False)
        v = np.zeros(m)
        v[idx] = rng.dirichlet(np.ones(k))
        out.append(v)
    return out[:count]


def duality_check(E, result, trial_measures=None, n_trials=50, seed=0, tol=1e-6, overscale=()):
    """Both directions of the duality for the discretized energy.

    The discrete energy of a measure nu = sum v_i delta_{x_i} on the samples is
    I_hat(nu) = v^T A v with the matrix used by the solver.  nu* = mu_eq /
    sqrt(gamma_hat) must have I_hat = 1 and mass 1/sqrt(gamma_hat); every trial
    with I_hat <= 1 must have mass at most 1/sqrt(gamma_hat) + tol.  Trials are
    probability vectors on the samples rescaled to I_hat = 1; ``overscale``
    lists extra factors > 1 applied to the first trials to exercise the
    exclusion filter.
    """
    gamma = result.gamma_hat
    if not gamma > 0:
        raise DegenerateGamma("gamma_hat must be positive")
    A = energy_matrix(result.samples, DIAG_RULE, result.scale)
    w = result.weights
    root = math.sqrt(gamma)
    star = w / root
    I_star = float(star @ (A @ star))
    mass_star = math.fsum(star.tolist())
    bound = 1.0 / root
    trials = _trial_weights(result, n_trials, seed) if trial_measures is None else list(trial_measures)
    rows = []
    for i, v in enumerate(trials):
        v = np.asarray(v, dtype=float)
        q = float(v @ (A @ v))
        c = 1.0 / math.sqrt(q)
        if i < len(overscale):
            c *= overscale[i]
        nu = c * v
        I_nu = float(nu @ (A @ nu))
        mass = math.fsum(nu.tolist())
        admissible = I_nu <= 1.0 + 1e-12
        rows.append({"I_hat": I_nu, "mass": mass, "admissible": admissible,
                     "ok": (mass <= bound + tol) if admissible else None})
    checked = [r for r in rows if r["admissible"]]
    return {
        "gamma_hat": gamma, "I_star": I_star, "mass_star": mass_star, "mass_bound": bound,
        "equality_ok": abs(I_star - 1.0) <= 1e-9 and abs(mass_star - bound) <= 1e-12 * bound,
        "trials": rows, "n_checked": len(checked), "n_excluded": len(rows) - len(checked),
        "max_mass": max((r["mass"] for r in checked), default=None),
        "inequality_ok": all(r["ok"] for r in checked),
    }


def fs_volume(E, N=200_000, seed=0):
    """Fubini-Study volume of E by the hit fraction of FS samples, with its standard error."""
    rng = np.random.default_rng([seed, 2718])
    hits = 0
    done = 0
    while done < N:
        k = min(1 << 16, N - done)
        hits += int(E.contains(fs_rows(rng, E.n, k)).sum())
        done += k
    p = hits / N
    return p, math.sqrt(p * (1.0 - p) / N)


def volume_bound_check(E, m=400, N=200_000, seed=0, cap=None):
    """Vol_FS(E) <= sqrt(1/(2n)) / sqrt(gamma_hat) + 3 * stderr.

    The standard error combines the hit-fraction error of the volume and the
    discretization error of the right side, estimated from the change of
    gamma_hat between m and 2m samples.  The volume-only form is reported as
    ``volume_only_ok``.
    """
    gamma, _, rep = cap if cap is not None else capacity(E, m=m, seed=seed, fekete_s=0)
    vol, se_vol = fs_volume(E, N, seed)
    a_n = math.sqrt(1.0 / (2 * E.n))
    bound = a_n / math.sqrt(gamma)
    se_bound = a_n * _inv_sqrt_sd(gamma, rep.get("refine_gap") or 0.0)
    se = math.hypot(se_vol, se_bound)
    return {"volume": vol, "stderr_volume": se_vol, "bound": bound, "stderr_bound": se_bound,
            "stderr": se, "gamma_hat": gamma, "ok": vol <= bound + 3 * se,
            "volume_only_ok": vol <= bound + 3 * se_vol, "margin": bound + 3 * se - vol}


def _inv_root_with_sd(E, m, seed):
    gamma, _, rep = capacity(E, m=m, seed=seed, fekete_s=0)
    return 1.0 / math.sqrt(gamma), _inv_sqrt_sd(gamma, rep["refine_gap"]), gamma


def subadditivity_check(sets, union_set=None, m=400, seed=0):
    """1/sqrt(gamma(union)) <= sum_j 1/sqrt(gamma(E_j)) + 3 * combined sd."""
    from .sets import union

    sets = list(sets)
    U = union_set if union_set is not None else union(sets)
    lhs, sd_l, g_u = _inv_root_with_sd(U, m, seed)
    parts = ordered_map(lambda E: _inv_root_with_sd(E, m, seed), sets)
    rhs = math.fsum(p[0] for p in parts)
    sd = math.sqrt(sd_l**2 + math.fsum(p[1] ** 2 for p in parts))
    return {"lhs": lhs, "rhs": rhs, "tolerance": 3 * sd, "ok": lhs <= rhs + 3 * sd,
            "gamma_union": g_u, "gamma_parts": [p[2] for p in parts]}


def monotone_limit_check(center, radii, m=400, seed=0, rel_tol=0.05):
    """kappa_hat along a monotone sequence of balls, the last radius being the limit.

    Reports whether kappa_hat moves in the same direction as the radii (within
    3 combined refinement sd) and whether the second to last value is within
    rel_tol of the limit value.
    """
    from .sets import ball

    radii = [float(r) for r in radii]
    if len(radii) < 2:
        raise ValueError("need at least two radii")
    diffs = np.diff(radii)
    if np.all(diffs <= 0):
        direction = -1
    elif np.all(diffs >= 0):
        direction = 1
    else:
        raise ValueError("radii must be monotone")
    if any(r <= 0 for r in radii):
        raise ValueError("radii must be positive")

    def one(r):
        gamma, kappa, rep = capacity(ball(center, r), m=m, seed=seed, fekete_s=0)
        return kappa, kappa * rep["refine_gap"]

    vals = ordered_map(one, radii)
    kappas = [v[0] for v in vals]
    sds = [v[1] for v in vals]
    steps_ok = []
    for k in range(len(radii) - 1):
        slack = 3 * math.hypot(sds[k], sds[k + 1]) + 1e-12
        if radii[k + 1] == radii[k]:
            steps_ok.append(abs(kappas[k + 1] - kappas[k]) <= slack)
        else:
            steps_ok.append(direction * (kappas[k + 1] - kappas[k]) >= -slack)
    limit = kappas[-1]
    rel = abs(kappas[-2] - limit) / limit
    return {"radii": radii, "kappa": kappas, "direction": direction, "monotone_ok": all(steps_ok),
            "limit": limit, "final_rel_gap": rel, "converged_ok": rel <= rel_tol,
            "ok": all(steps_ok) and rel <= rel_tol}


def disk_energy_mc(N, seed=0, radius=1.0):
    """MC estimate of I(normalized Lebesgue measure on the disk slice) via the affine kernel."""
    R = float(radius)

    def pair_values(rng, k):
        def pts(k):
            rho = R * np.sqrt(rng.random(k))
            z = rho * np.exp(2j * np.pi * rng.random(k))
            return np.stack([z, np.zeros(k)], axis=1)

        vals = -geo.normalized_kernel_values(pts(k), pts(k))
        ok = np.isfinite(vals)
        return vals[ok], int(k - ok.sum())

    return chunked_mc(pair_values, N, seed)


def disk_example(m=400, N=100_000, seed=0, radius=1.0):
    """Finite energy and positive capacity of the disk {[1 : z : 0] : |z| <= radius}."""
    a = disk_energy_mc(N, seed, radius)
    b = disk_energy_mc(4 * N, seed + 1, radius)
    combined = math.hypot(a.stderr, b.stderr)
    stable = math.isfinite(a.value) and abs(a.value - b.value) <= 3 * combined
    E = disk_slice(radius)
    res = equilibrium_solve(E, m, seed=seed)
    d2 = math.sin(E.diameter / geo.SQRT2)
    return {"I_N": a.value, "se_N": a.stderr, "I_4N": b.value, "se_4N": b.stderr,
            "finite": math.isfinite(a.value) and math.isfinite(b.value), "stable": stable,
            "gamma_hat": res.gamma_hat, "kappa_hat": res.kappa_hat, "d2_bound": d2,
            "fw_gap": res.fw_gap, "ok": stable and res.kappa_hat > 0.01}


def polarity_diagnostic(E, m_list=(100, 200, 400), scales=(1.0, 1e-2, 1e-4), seed=0):
    """Growth of gamma_hat as the diagonal proxy shrinks, at several sample sizes.

    slope(m) = d gamma_hat / d(-log scale).  For a set carrying a finite-energy
    measure the slope decays like 1/m; for finite sets it stays put.  The flag
    ``diverging`` is a diagnostic, not a proof of polarity.
    """
    rows = []
    for m in m_list:
        X = distinct_samples(E, m, np.random.default_rng([seed, 0]))
        g = [equilibrium_solve(None, samples=X, scale=sc).gamma_hat for sc in scales]
        slope = (g[-1] - g[0]) / (math.log(scales[0]) - math.log(scales[-1]))
        rows.append({"m": int(X.shape[0]), "gamma": g, "slope": slope})
    first, last = rows[0], rows[-1]
    ratio = last["slope"] / first["slope"] if first["slope"] > 0 else 0.0
    size_ratio = first["m"] / last["m"]
    # geometric midpoint between 1/m decay and no decay
    return {"rows": rows, "slope_ratio": ratio, "diverging": ratio >= math.sqrt(size_ratio)}
