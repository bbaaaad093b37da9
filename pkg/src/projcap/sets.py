"""Compact subsets of P^n described by membership, sampling and projection.

Every builtin set keeps its sampler inside the set and, when it has a
``project``, that map lands in the set as well.  Samplers are pure functions of
a numpy Generator, so a seed fixes the whole point cloud.
"""
from dataclasses import dataclass, field

import numpy as np

from . import geometry as geo
from .errors import DimensionMismatch, EmptySet, SamplerExhausted
from .measures import fs_rows

CONTAINS_TOL = 1e-10


@dataclass(frozen=True)
class SetSpec:
    """A compact set E in P^n.

    ``contains(X)`` maps an (m, n+1) array to a boolean array, ``sample(rng, k)``
    returns k unit rows lying in E and ``project(X)``, when present, sends
    rows to nearby points of E.  ``points`` is set for finite sets.
    """

    n: int
    contains: callable = field(repr=False)
    sample: callable = field(repr=False)
    project: callable = field(default=None, repr=False)
    label: str = ""
    diameter: float = None
    volume: float = None
    points: np.ndarray = field(default=None, repr=False)
    is_full: bool = False

    @property
    def is_finite(self):
        return self.points is not None

    def draw(self, seed, index):
        rng = np.random.default_rng([seed, index])
        return geo.ProjectivePoint(self.sample(rng, 1)[0])

    def contains_point(self, p):
        return bool(self.contains(geo.as_coords(p))[0])


def distinct_samples(E, m, rng, max_rounds=20):
    """Draw m points of E pairwise separated by sigma >= 1e-12.

    Finite sets return all their points when m exceeds their size.
    Raises SamplerExhausted when fewer than two distinct points come out.
    """
    if E.is_finite:
        X = E.points if E.points.shape[0] <= m else E.points[np.sort(rng.choice(E.points.shape[0], m, replace=False))]
        if X.shape[0] < 2:
            raise SamplerExhausted(f"{E.label}: fewer than two distinct points")
        return X
    X = E.sample(rng, m)
    for _ in range(max_rounds):
        S2 = geo.sigma2_matrix(X)
        np.fill_diagonal(S2, 1.0)
        close = np.triu(S2 < 1e-24, 1).any(axis=0)
        if not close.any():
            return X
        X = X[~close]
        X = np.vstack([X, E.sample(rng, m - X.shape[0])])
    raise SamplerExhausted(f"{E.label}: could not draw {m} distinct points")


def project_to_ball(X, center, radius):
    """Move rows outside the geodesic ball to its boundary along the geodesic from the center."""
    X = np.array(X, dtype=np.complex128, copy=True)
    c = center
    alpha = X @ c.conj()
    theta_r = min(radius, geo.DIAMETER) / geo.SQRT2
    s2 = 1.0 - np.abs(alpha) ** 2
    outside = np.sqrt(np.maximum(s2, 0.0)) > np.sin(theta_r)
    if theta_r >= np.pi / 2 - 1e-15 or not outside.any():
        return X
    idx = np.nonzero(outside)[0]
    a = alpha[idx]
    perp = X[idx] - a[:, None] * c[None, :]
    nrm = np.linalg.norm(perp, axis=1)
    safe = nrm > 1e-300
    phase = np.where(np.abs(a) > 0, a / np.maximum(np.abs(a), 1e-300), 1.0)
    v = perp / np.where(safe, nrm, 1.0)[:, None]
    Y = np.cos(theta_r) * phase[:, None] * c[None, :] + np.sin(theta_r) * v
    X[idx] = geo.normalize_rows(Y)
    return X


def _unit_perp_rows(rng, c, k):
    """k uniformly distributed unit vectors of the complex hyperplane orthogonal to c."""
    g = rng.standard_normal((k, c.size)) + 1j * rng.standard_normal((k, c.size))
    g = g - (g @ c.conj())[:, None] * c[None, :]
    return geo.normalize_rows(g)


def full_space(n):
    """All of P^n with the Fubini-Study sampler."""
    return SetSpec(
        n=n,
        contains=lambda X: np.ones(np.asarray(X).shape[0], dtype=bool),
        sample=lambda rng, k: fs_rows(rng, n, k),
        project=geo.normalize_rows,
        label=f"P^{n}",
        diameter=geo.DIAMETER,
        volume=1.0,
        is_full=True,
    )


def ball(center, radius):
    """Closed geodesic ball B(center, radius), sampled uniformly in Fubini-Study volume."""
    c = geo.as_coords(center)[0]
    n = c.size - 1
    if not radius > 0:
        raise ValueError("ball radius must be positive")
    r = min(float(radius), geo.DIAMETER)
    smax2 = np.sin(r / geo.SQRT2) ** 2

    def contains(X):
        d = geo.distance_matrix(geo.as_coords(X), c[None, :])[:, 0]
        return d <= r + CONTAINS_TOL

    def sample(rng, k):
        # sigma^2 to the center has FS density proportional to u^{n-1} on [0, 1]
        u = smax2 * rng.random(k) ** (1.0 / n)
        v = _unit_perp_rows(rng, c, k)
        X = np.sqrt(1.0 - u)[:, None] * c[None, :] + np.sqrt(u)[:, None] * v
        return geo.normalize_rows(X)

    return SetSpec(
        n=n,
        contains=contains,
        sample=sample,
        project=lambda X: project_to_ball(geo.normalize_rows(X), c, r),
        label=f"ball(r={radius:g})",
        diameter=min(2 * r, geo.DIAMETER),
        volume=float(smax2**n),
    )


def real_circle():
    """Real points [x0 : x1] of P^1, a great circle under the sphere correspondence."""

    def contains(X):
        X = geo.as_coords(X)
        return np.abs(np.abs(np.sum(X * X, axis=1)) - 1.0) <= 2 * CONTAINS_TOL

    def sample(rng, k):
        t = rng.random(k) * np.pi
        return np.stack([np.cos(t), np.sin(t)], axis=1).astype(np.complex128)

    def project(X):
        X = geo.normalize_rows(X)
        out = np.empty_like(X)
        for i, x in enumerate(X):
            M = np.real(np.outer(x, x.conj()))
            w, V = np.linalg.eigh(M)
            out[i] = V[:, -1].astype(np.complex128)
        return out

    return SetSpec(n=1, contains=contains, sample=sample, project=project,
                   label="real circle", diameter=geo.DIAMETER, volume=0.0)


def finite_set(points, label="finite"):
    X = geo.as_coords(points)
    if X.shape[0] == 0:
        raise EmptySet("finite set needs at least one point")
    keep = [0]
    for i in range(1, X.shape[0]):
        if geo.sigma2_matrix(X[i:i + 1], X[keep]).min() >= 1e-24:
            keep.append(i)
    X = X[keep]
    n = X.shape[1] - 1

    def contains(Y):
        S2 = geo.sigma2_matrix(geo.as_coords(Y), X)
        return np.sqrt(S2.min(axis=1)) <= CONTAINS_TOL

    def sample(rng, k):
        return X[rng.integers(0, X.shape[0], k)]

    diam = float(geo.distance_matrix(X).max()) if X.shape[0] > 1 else 0.0
    return SetSpec(n=n, contains=contains, sample=sample, project=None, label=label,
                   diameter=diam, volume=0.0, points=X)


def seqlimit(k_max=19):
    """Snapshot {1/k : 1 <= k <= k_max} U {0} on the real great circle, as [1 : x]."""
    xs = [0.0] + [1.0 / k for k in range(1, k_max + 1)]
    X = geo.normalize_rows(np.array([[1.0, x] for x in xs], dtype=np.complex128))
    return finite_set(X, label=f"seqlimit(k_max={k_max})")


def disk_slice(radius=1.0):
    """Closed disk {[1 : z : 0] : |z| <= radius} in P^2, sampled by normalized Lebesgue measure.

    The slice lies in the line {z2 = 0}, where it is the geodesic ball about
    [1:0:0] of radius sqrt2 * arcsin(R / sqrt(1 + R^2)).
    """
    R = float(radius)
    if not R > 0:
        raise ValueError("disk radius must be positive")
    c = np.array([1.0, 0.0, 0.0], dtype=np.complex128)
    r_geo = geo.SQRT2 * np.arcsin(R / np.sqrt(1 + R * R))

    def contains(X):
        X = geo.as_coords(X)
        on_line = np.abs(X[:, 2]) <= CONTAINS_TOL
        d = geo.distance_matrix(X, c[None, :])[:, 0]
        return on_line & (d <= r_geo + CONTAINS_TOL)

    def sample(rng, k):
        rho = R * np.sqrt(rng.random(k))
        phi = 2 * np.pi * rng.random(k)
        z = rho * np.exp(1j * phi)
        return geo.normalize_rows(np.stack([np.ones(k), z, np.zeros(k)], axis=1))

    def project(X):
        X = np.array(geo.as_coords(X), copy=True)
        X[:, 2] = 0.0
        zero = np.linalg.norm(X, axis=1) < 1e-300
        X[zero] = c
        return project_to_ball(geo.normalize_rows(X), c, r_geo)

    return SetSpec(n=2, contains=contains, sample=sample, project=project,
                   label=f"disk-slice(R={R:g})", diameter=min(2 * r_geo, geo.DIAMETER), volume=0.0)


def union(sets, label=None):
    """Union of sets of equal dimension; the sampler cycles through the members."""
    sets = list(sets)
    if not sets:
        raise EmptySet("union of no sets")
    n = sets[0].n
    if any(E.n != n for E in sets):
        raise DimensionMismatch("union members must share the dimension")

    def contains(X):
        out = np.zeros(geo.as_coords(X).shape[0], dtype=bool)
        for E in sets:
            out |= E.contains(X)
        return out

    def sample(rng, k):
        counts = [k // len(sets) + (1 if i < k % len(sets) else 0) for i in range(len(sets))]
        parts = [E.sample(rng, c) for E, c in zip(sets, counts) if c > 0]
        return np.vstack(parts)

    project = None
    if all(E.project is not None for E in sets):
        def project(X):
            X = geo.normalize_rows(X)
            cands = [E.project(X) for E in sets]
            best = cands[0].copy()
            best_s2 = geo.sigma2_rows(X, best)
            for Y in cands[1:]:
                s2 = geo.sigma2_rows(X, Y)
                better = s2 < best_s2
                best[better] = Y[better]
                best_s2 = np.minimum(best_s2, s2)
            return best

    points = None
    if all(E.is_finite for E in sets):
        points = finite_set(np.vstack([E.points for E in sets])).points
    return SetSpec(n=n, contains=contains, sample=sample, project=project,
                   label=label or "union(" + ", ".join(E.label for E in sets) + ")",
                   diameter=None, volume=None, points=points)
