"""Fekete configurations, diameters of order s and the transfinite diameter."""
import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from . import geometry as geo
from .errors import SamplerExhausted, TooFewPoints
from .io import points_to_json
from .measures import DiscreteMeasure, potential_values
from .parallel import ordered_map

S_MAX = 200
MONOTONE_SLACK = 1e-6


def theta_objective(points):
    """(1/(s(s-1))) sum_{i != j} -G(z_i, z_j); +inf when two points coincide."""
    X = geo.as_coords(points)
    s = X.shape[0]
    if s < 2:
        raise TooFewPoints("theta needs at least two points")
    K = geo.kernel_matrix(X)
    iu = np.triu_indices(s, 1)
    vals = K[iu]
    if np.isneginf(vals).any():
        return math.inf
    return max(0.0, -2.0 * math.fsum(vals.tolist()) / (s * (s - 1)))


def _theta_and_grad(u, s, dim):
    """theta on raw (unnormalized) coordinates and its real gradient."""
    Z = u.reshape(2, s, dim)
    X = Z[0] + 1j * Z[1]
    nrm2 = np.sum(X.real**2 + X.imag**2, axis=1)
    C = X.conj() @ X.T
    W = np.outer(nrm2, nrm2) - (C.real**2 + C.imag**2)
    np.fill_diagonal(W, 1.0)
    if np.any(W <= 0):
        return math.inf, np.zeros_like(u)
    S2 = W / np.outer(nrm2, nrm2)
    np.fill_diagonal(S2, 1.0)
    coef = 2.0 / (s * (s - 1))
    iu = np.triu_indices(s, 1)
    f = -0.5 * coef * float(np.sum(np.log(S2[iu])))
    # d/dx_i of -1/2 log sigma^2(x_i, x_j), summed over j
    Winv = 1.0 / W
    np.fill_diagonal(Winv, 0.0)
    term1 = X * (Winv @ nrm2)[:, None]
    term2 = (Winv * C.T) @ X
    G = -(term1 - term2) + X * ((s - 1) / nrm2)[:, None]
    G *= coef
    return f, np.concatenate([G.real.ravel(), G.imag.ravel()])


def _refine_full(X, gtol=1e-11, maxiter=2000):
    s, dim = X.shape
    u0 = np.concatenate([X.real.ravel(), X.imag.ravel()])
    res = optimize.minimize(_theta_and_grad, u0, args=(s, dim), jac=True, method="L-BFGS-B",
                            options={"gtol": gtol, "ftol": 1e-15, "maxiter": maxiter})
    Z = res.x.reshape(2, s, dim)
    return geo.normalize_rows(Z[0] + 1j * Z[1])


def _refine_projected(X, project, iters=200, tol=1e-13):
    """Projected gradient descent with backtracking, for sets with a projection."""
    s, dim = X.shape
    f, g = _theta_and_grad(np.concatenate([X.real.ravel(), X.imag.ravel()]), s, dim)
    step = 0.1
    for _ in range(iters):
        G = g[: s * dim].reshape(s, dim) + 1j * g[s * dim:].reshape(s, dim)
        improved = False
        while step > 1e-12:
            Y = project(geo.normalize_rows(X - step * G))
            fy, gy = _theta_and_grad(np.concatenate([Y.real.ravel(), Y.imag.ravel()]), s, dim)
            if fy < f:
                improved = True
                break
            step *= 0.5
        if not improved:
            break
        gain = f - fy
        X, f, g = Y, fy, gy
        step *= 2.0
        if gain <= tol * max(f, 1e-300):
            break
    return X


@dataclass
class FeketeConfiguration:
    points: np.ndarray = field(repr=False)
    theta: float
    s: int
    restarts_used: int
    sweeps: int
    theta_init: float = math.inf
    wall_ms: float = 0.0

    @property
    def D(self):
        return math.exp(-self.theta)

    def measure(self):
        return DiscreteMeasure.uniform(self.points)

    def to_json(self):
        return {"s": self.s, "theta": self.theta, "D": self.D, "restarts": self.restarts_used,
                "sweeps": self.sweeps,
                "points": points_to_json(self.points)}


class _Exchange:
    """Incremental bookkeeping of -G between a candidate pool and the configuration."""

    def __init__(self, pool, X):
        self.pool = pool
        self.X = X.copy()
        self.s = X.shape[0]
        K = -geo.kernel_matrix(pool, X)
        self.inf = np.isinf(K)
        self.fin = np.where(self.inf, 0.0, K)
        self.fin_sum = self.fin.sum(axis=1)
        self.inf_cnt = self.inf.sum(axis=1)

    def set_point(self, i, x):
        self.X[i] = x
        col = -geo.kernel_matrix(self.pool, x[None, :])[:, 0]
        hit = np.isinf(col)
        new = np.where(hit, 0.0, col)
        self.fin_sum += new - self.fin[:, i]
        self.inf_cnt += hit.astype(int) - self.inf[:, i]
        self.fin[:, i] = new
        self.inf[:, i] = hit

    def sweep(self):
        """One pass of single-point exchange; returns the number of moves."""
        moves = 0
        for i in range(self.s):
            others = np.delete(self.X, i, axis=0)
            cur = -geo.kernel_matrix(self.X[i:i + 1], others)[0]
            cur_val = math.inf if np.isinf(cur).any() else float(cur.sum())
            score = self.fin_sum - self.fin[:, i]
            score[(self.inf_cnt - self.inf[:, i]) > 0] = np.inf
            k = int(np.argmin(score))
            if score[k] < cur_val - 1e-13 * max(1.0, abs(cur_val)):
                self.set_point(i, self.pool[k])
                moves += 1
        return moves


def _config_key(X):
    Y = geo.canonical_order(X)
    return Y, np.concatenate([Y.real, Y.imag], axis=1).ravel()


def _better(a, b):
    """Deterministic comparison of (theta, key) pairs."""
    if b is None:
        return True
    if abs(a[0] - b[0]) > 1e-12 * max(1.0, abs(b[0])):
        return a[0] < b[0]
    return tuple(a[1].tolist()) < tuple(b[1].tolist())


def _candidate_pool(E, s, pool, seed):
    rng = np.random.default_rng([seed, 7919])
    if E.is_finite:
        P = E.points
    else:
        P = E.sample(rng, max(pool, s))
    if P.shape[0] < s:
        raise SamplerExhausted(f"{E.label}: only {P.shape[0]} distinct points for s={s}")
    return P


def _initial(P, s, rng):
    """s pool points, chosen greedily from a random start so none coincide."""
    idx = rng.permutation(P.shape[0])
    chosen = [idx[0]]
    for k in idx[1:]:
        if len(chosen) == s:
            break
        if geo.sigma2_matrix(P[k:k + 1], P[chosen]).min() >= 1e-24:
            chosen.append(k)
    if len(chosen) < s:
        raise SamplerExhausted(f"could not find {s} distinct pool points")
    return P[np.array(chosen)]


def _one_restart(E, P, s, sweeps_max, tol, seed, r):
    rng = np.random.default_rng([seed, r + 1])
    X0 = _initial(P, s, rng)
    ex = _Exchange(P, X0)
    theta0 = theta_objective(ex.X)
    theta = theta0
    sweeps = 0
    refine = None
    if not E.is_finite:
        refine = _refine_full if E.is_full else (lambda X: _refine_projected(X, E.project))
        if E.project is None and not E.is_full:
            refine = None
    while sweeps < sweeps_max:
        sweeps += 1
        ex.sweep()
        X = ex.X
        t = theta_objective(X)
        if refine is not None:
            Y = refine(X)
            ty = theta_objective(Y)
            if ty < t and E.contains(Y).all():
                X, t = Y, ty
                for i in range(s):
                    ex.set_point(i, X[i])
        done = theta - t < tol * max(theta, 1e-300) if math.isfinite(theta) else False
        theta = min(theta, t)
        if done:
            break
    X = ex.X
    t = theta_objective(X)
    return t, X, sweeps, theta0


def fekete_solve(E, s, restarts=8, pool=2000, sweeps_max=200, tol=1e-9, seed=0):
    """Approximate Fekete configuration of s points in E, best of ``restarts`` starts."""
    if s < 2:
        raise TooFewPoints("s must be at least 2")
    if s > S_MAX:
        raise ValueError(f"s is capped at {S_MAX}")
    t0 = time.perf_counter()
    P = _candidate_pool(E, s, pool, seed)
    runs = ordered_map(lambda r: _one_restart(E, P, s, sweeps_max, tol, seed, r), range(restarts))
    best = None
    best_X = None
    sweeps = 0
    for t, X, sw, _ in runs:
        Y, key = _config_key(X)
        if _better((t, key), best):
            best, best_X, sweeps = (t, key), Y, sw
    theta_init = min(r[3] for r in runs)
    theta = theta_objective(best_X)
    return FeketeConfiguration(points=best_X, theta=theta, s=s, restarts_used=restarts, sweeps=sweeps,
                               theta_init=theta_init, wall_ms=1000.0 * (time.perf_counter() - t0))


def diameter_of_order(E, s, **opts):
    """D_s = exp(-theta_s) from the solved configuration."""
    return fekete_solve(E, s, **opts).D


@dataclass
class TransfiniteTable:
    rows: list
    violations: list
    limit: float
    kappa_gap: float = None
    configs: list = field(default_factory=list, repr=False)


def transfinite_estimate(E, s_list, kappa_hat=None, **opts):
    """Table of (s, theta_s, D_s); the limit is the mean of the last three D_s.

    Violations of D_s <= D_{s'} for s > s' beyond the slack are reported, not
    corrected.
    """
    s_list = list(s_list)
    if any(b <= a for a, b in zip(s_list, s_list[1:])):
        raise ValueError("s_list must be strictly increasing")
    if s_list and s_list[-1] > S_MAX:
        raise ValueError(f"s is capped at {S_MAX}")
    configs = [fekete_solve(E, s, **opts) for s in s_list]
    rows = [(c.s, c.theta, c.D) for c in configs]
    violations = []
    for (s0, _, d0), (s1, _, d1) in zip(rows, rows[1:]):
        if d1 > d0 + MONOTONE_SLACK:
            violations.append((s0, s1, d1 - d0))
    tail = [r[2] for r in rows[-3:]]
    limit = math.fsum(tail) / len(tail) if tail else math.nan
    gap = None if kappa_hat is None else abs(limit - kappa_hat)
    return TransfiniteTable(rows=rows, violations=violations, limit=limit, kappa_gap=gap, configs=configs)


def equidistribution_check(configs, reference, testpoints, min_dist=0.1):
    """Max |G_{nu_s} - G_{mu_eq}| over test points at distance >= min_dist from the atoms of nu_s.

    ``reference`` is an EquilibriumResult or a DiscreteMeasure.  Returns a
    list of (s, discrepancy, points used).
    """
    ref = reference.measure() if hasattr(reference, "measure") else reference
    T = geo.as_coords(testpoints)
    out = []
    for c in configs:
        nu = c.measure() if hasattr(c, "measure") else c
        keep = geo.distance_matrix(T, nu.atoms).min(axis=1) >= min_dist
        if not keep.any():
            out.append((nu.size, math.nan, 0))
            continue
        diff = np.abs(potential_values(nu, T[keep]) - potential_values(ref, T[keep]))
        out.append((nu.size, float(diff.max()), int(keep.sum())))
    return out
