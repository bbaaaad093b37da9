"""Chebyshev constants M_s = sup_{z_j in K} inf_{zeta in K} (1/s) sum_j -G(zeta, z_j).

The outer sup runs by single-point exchange over a finite pool (points may
repeat).  The inner inf is a minimum over a pool that grows: after every sweep
the current minimizer is polished by a local descent and appended to the pool.
"""
import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from . import geometry as geo
from .errors import SamplerExhausted
from .fekete import fekete_solve
from .parallel import ordered_map

DEFAULT_TOL = 1e-4


def solver_slack(*tols):
    """Declared slack on inequality checks: 3 times the loosest solver tolerance."""
    return 3.0 * max(tols) if tols else 3.0 * DEFAULT_TOL


def mean_kernel(Z, zeta):
    """(1/s) sum_j -G(zeta_k, z_j) for each row zeta_k; +inf on coincidence."""
    K = -geo.kernel_matrix(geo.as_coords(zeta), geo.as_coords(Z))
    return K.mean(axis=1)


def _value_and_grad(u, Z):
    """Mean of -1/2 log sigma^2(zeta, z_j) on a raw zeta and its real gradient."""
    d = Z.shape[1]
    x = u[:d] + 1j * u[d:]
    nx = float(np.sum(x.real**2 + x.imag**2))
    c = Z.conj() @ x  # <z_j, x>
    nz = np.sum(Z.real**2 + Z.imag**2, axis=1)
    W = nx * nz - (c.real**2 + c.imag**2)
    if np.any(W <= 0):
        return math.inf, np.zeros_like(u)
    s = Z.shape[0]
    f = -0.5 * float(np.mean(np.log(W / (nx * nz))))
    g = (-(x[None, :] * nz[:, None] - Z * c[:, None]) / W[:, None]).sum(axis=0) + s * x / nx
    g /= s
    return f, np.concatenate([g.real, g.imag])


def _local_min(E, Z, zeta):
    """Descend the mean kernel from zeta inside E; returns a point of E."""
    if E.is_finite:
        return zeta
    if E.is_full:
        u0 = np.concatenate([zeta.real, zeta.imag])
        res = optimize.minimize(_value_and_grad, u0, args=(Z,), jac=True, method="L-BFGS-B",
                                options={"gtol": 1e-12, "ftol": 1e-15, "maxiter": 500})
        d = Z.shape[1]
        return geo.normalize(res.x[:d] + 1j * res.x[d:]).coords.copy()
    if E.project is None:
        return zeta
    d = Z.shape[1]
    x = zeta
    f, g = _value_and_grad(np.concatenate([x.real, x.imag]), Z)
    step = 0.1
    for _ in range(100):
        G = g[:d] + 1j * g[d:]
        moved = False
        while step > 1e-12:
            y = E.project(geo.normalize_rows((x - step * G)[None, :]))[0]
            fy, gy = _value_and_grad(np.concatenate([y.real, y.imag]), Z)
            if fy < f:
                moved = True
                break
            step *= 0.5
        if not moved:
            break
        gain = f - fy
        x, f, g = y, fy, gy
        step *= 2.0
        if gain <= 1e-10 * max(abs(f), 1.0):
            break
    return x


@dataclass
class ChebyshevResult:
    s: int
    M_s: float
    maximizer_points: np.ndarray = field(repr=False)
    inner_inf_witness: np.ndarray = field(repr=False)
    outer_pool: int = 0
    inner_pool: int = 0
    sweeps: int = 0
    wall_ms: float = 0.0

    @property
    def pools(self):
        return f"{self.outer_pool}x{self.inner_pool}"


class _Table:
    """Kernel table -G(inner, outer) split into finite values and coincidence counts.

    Outer columns are a fixed base pool followed by a block of extra columns
    (the current configuration and its local perturbations) that is rebuilt
    every sweep.
    """

    def __init__(self, inner, base):
        self.base = base
        self.inner = inner
        self.fin_b, self.inf_b = self._block(inner, base)
        self.extra = base[:0]
        self.fin_x, self.inf_x = self._block(inner, self.extra)

    @staticmethod
    def _block(A, B):
        K = -geo.kernel_matrix(A, B)
        hit = np.isinf(K)
        return np.where(hit, 0.0, K), hit

    def set_extra(self, extra):
        self.extra = extra
        self.fin_x, self.inf_x = self._block(self.inner, extra)
        self.outer = np.vstack([self.base, extra])
        self.fin = np.hstack([self.fin_b, self.fin_x])
        self.inf = np.hstack([self.inf_b, self.inf_x])

    def add_inner(self, zeta):
        fb, ib = self._block(zeta[None, :], self.base)
        fx, ix = self._block(zeta[None, :], self.extra)
        self.inner = np.vstack([self.inner, zeta[None, :]])
        self.fin_b = np.vstack([self.fin_b, fb])
        self.inf_b = np.vstack([self.inf_b, ib])
        self.set_extra(self.extra)

    def sums(self, idx):
        return self.fin[:, idx].sum(axis=1), self.inf[:, idx].sum(axis=1)

    def value(self, idx):
        fs, ic = self.sums(idx)
        vals = np.where(ic > 0, np.inf, fs / len(idx))
        k = int(np.argmin(vals))
        return float(vals[k]), k


def _exchange_sweep(tab, idx):
    """Replace each position by the outer candidate maximizing the inner min."""
    s = len(idx)
    fs, ic = tab.sums(idx)
    moved = 0
    for i in range(s):
        base_f = fs - tab.fin[:, idx[i]]
        base_c = ic - tab.inf[:, idx[i]]
        vals = np.where((base_c[:, None] + tab.inf) > 0, np.inf, base_f[:, None] + tab.fin)
        col_min = vals.min(axis=0)
        cur = col_min[idx[i]]
        k = int(np.argmax(col_min))
        if col_min[k] > cur + 1e-13 * max(1.0, abs(cur)) and k != idx[i]:
            idx[i] = k
            fs = base_f + tab.fin[:, k]
            ic = base_c + tab.inf[:, k]
            moved += 1
    return moved


def _refine_inner(E, tab, idx, k_best=3):
    """Polish the k_best lowest inner points and add them to the pool."""
    fs, ic = tab.sums(idx)
    vals = np.where(ic > 0, np.inf, fs / len(idx))
    Z = tab.outer[idx]
    order = np.argsort(vals, kind="stable")[:k_best]
    starts = [tab.inner[k].copy() for k in order if np.isfinite(vals[k])]
    for z0 in starts:
        z = _local_min(E, Z, z0)
        if E.contains(z[None, :])[0]:
            tab.add_inner(z)


def _perturb(E, Z, rho, rng, per_point):
    """Random points at sine distance about rho from each row of Z, mapped into E."""
    reps = np.repeat(Z, per_point, axis=0)
    g = rng.standard_normal(reps.shape) + 1j * rng.standard_normal(reps.shape)
    g -= np.sum(reps.conj() * g, axis=1)[:, None] * reps
    g /= np.maximum(np.linalg.norm(g, axis=1), 1e-300)[:, None]
    Y = geo.normalize_rows(reps + rho * g)
    if E.project is not None:
        Y = E.project(Y)
    return Y[E.contains(Y)]


def _one_restart(E, base, inner, s, tol, sweeps_max, seed, r, start=None, per_point=12):
    rng = np.random.default_rng([seed, r + 1])
    tab = _Table(inner, base)
    Z = base[rng.integers(0, base.shape[0], s)] if start is None else geo.as_coords(start)
    local = not E.is_finite
    rho = 0.1 if local else 0.0
    prev = -math.inf
    sweeps = 0
    while sweeps < sweeps_max:
        sweeps += 1
        extra = np.vstack([Z, _perturb(E, Z, rho, rng, per_point)]) if local else Z
        tab.set_extra(extra)
        nb = base.shape[0]
        idx = list(range(nb, nb + s))
        _exchange_sweep(tab, idx)
        Z = tab.outer[idx].copy()
        tab.set_extra(Z)
        idx = list(range(nb, nb + s))
        _refine_inner(E, tab, idx)
        val, _ = tab.value(idx)
        if math.isinf(val):
            break
        small = abs(val - prev) <= tol * max(abs(val), 1e-300) if math.isfinite(prev) else False
        if small:
            if not local or rho < 1e-4:
                break
            rho *= 0.25
        prev = max(prev, val)
    # final certification of the inner inf from several starts
    _refine_inner(E, tab, idx, k_best=8)
    val, k = tab.value(idx)
    return val, Z, tab.inner[k], sweeps


def _pools(E, s, outer_pool, inner_pool, seed):
    if E.is_finite:
        return E.points, E.points
    rng = np.random.default_rng([seed, 104729])
    outer = E.sample(rng, outer_pool)
    inner = E.sample(rng, inner_pool)
    if s >= 2:
        # seed the outer pool with a Fekete configuration, a natural near-maximizer
        try:
            cfg = fekete_solve(E, s, restarts=2, pool=min(outer_pool, 1000), seed=seed)
            outer = np.vstack([cfg.points, outer])
        except SamplerExhausted:
            pass
    return outer, inner


def chebyshev_value(E, s, outer_pool=400, inner_pool=2000, restarts=4, tol=DEFAULT_TOL,
                    sweeps_max=50, seed=0, warm_starts=()):
    """Approximate M_s(E); +inf when every inner candidate coincides with a chosen point.

    ``warm_starts`` are extra s-point starting configurations searched in
    addition to the random restarts.
    """
    if s < 1:
        raise ValueError("s must be at least 1")
    t0 = time.perf_counter()
    outer, inner = _pools(E, s, outer_pool, inner_pool, seed)
    if outer.shape[0] == 0:
        raise SamplerExhausted(f"{E.label}: empty pool")
    starts = [None] * restarts + [np.asarray(z) for z in warm_starts]
    if any(z is not None and geo.as_coords(z).shape[0] != s for z in starts):
        raise ValueError(f"warm starts must have {s} points")
    runs = ordered_map(lambda r: _one_restart(E, outer, inner, s, tol, sweeps_max, seed, r, starts[r]),
                       range(len(starts)))
    best = max(range(len(runs)), key=lambda r: (runs[r][0], -r))
    val, Z, witness, sweeps = runs[best]
    if math.isfinite(val):
        val = float(mean_kernel(Z, witness[None, :])[0])
    return ChebyshevResult(s=s, M_s=max(val, 0.0), maximizer_points=Z, inner_inf_witness=witness,
                           outer_pool=int(outer.shape[0]), inner_pool=int(inner.shape[0]), sweeps=sweeps,
                           wall_ms=1000.0 * (time.perf_counter() - t0))


def chebyshev_superadditivity_check(E, s, t, tol=DEFAULT_TOL, **opts):
    """(s+t) M_{s+t} - s M_s - t M_t, with the declared slack."""
    if s < 1 or t < 1:
        raise ValueError("s and t must be at least 1")
    rs = chebyshev_value(E, s, tol=tol, **opts)
    rt = rs if t == s else chebyshev_value(E, t, tol=tol, **opts)
    # the concatenated maximizers are an admissible (s+t)-configuration
    joint = np.vstack([rs.maximizer_points, rt.maximizer_points])
    Ms, Mt = rs.M_s, rt.M_s
    Mst = chebyshev_value(E, s + t, tol=tol, warm_starts=[joint], **opts).M_s
    lhs = (s + t) * Mst
    rhs = s * Ms + t * Mt
    if math.isinf(lhs):
        residual = math.inf
    elif math.isinf(rhs):
        residual = -math.inf
    else:
        residual = lhs - rhs
    eps = solver_slack(tol)
    return {"s": s, "t": t, "M_s": Ms, "M_t": Mt, "M_st": Mst, "residual": residual,
            "eps": eps, "ok": residual >= -eps}


def theta_vs_chebyshev(E, s, tol=DEFAULT_TOL, fekete_opts=None, **opts):
    """(theta_s, M_s, gap = M_s - theta_s); the contract is gap >= -eps."""
    if s < 2:
        raise ValueError("s must be at least 2")
    cfg = fekete_solve(E, s, **(fekete_opts or {}))
    res = chebyshev_value(E, s, tol=tol, **opts)
    gap = res.M_s - cfg.theta if math.isfinite(res.M_s) else math.inf
    eps = solver_slack(tol, (fekete_opts or {}).get("tol", 1e-9))
    return {"s": s, "theta_s": cfg.theta, "M_s": res.M_s, "gap": gap, "eps": eps, "ok": gap >= -eps,
            "pools": res.pools, "wall_ms": res.wall_ms + cfg.wall_ms}
