"""Discrete measures on P^n, their potentials and energies.

Energies follow the sign convention I(mu, nu) = -int int G dmu dnu >= 0.
Two self-energies are offered for discrete measures: ``energy`` is the honest
one (+inf as soon as there is an atom) and ``offdiag_energy`` drops the i = j
terms, which is the quantity that converges for point clouds.
"""
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from . import geometry as geo
from .errors import (
    AtomCoincidence,
    DimensionMismatch,
    EmptyMeasure,
    SharedAtoms,
    SingleAtom,
    UnsortedGrid,
)
from .parallel import ordered_map

MC_CHUNK = 4096


def _merge_duplicates(atoms, weights, block=1024):
    """Merge atoms closer than the coincidence threshold, summing their weights."""
    m = atoms.shape[0]
    if m < 2:
        return atoms, weights
    parent = np.arange(m)
    thresh = geo.COINCIDENCE_SIGMA**2
    for start in range(0, m, block):
        S2 = geo.sigma2_matrix(atoms[start:start + block], atoms)
        rows, cols = np.nonzero(S2 < thresh)
        for r, c in zip(rows.tolist(), cols.tolist()):
            i = start + r
            if c < i and parent[i] == i:
                root = c
                while parent[root] != root:
                    root = parent[root]
                parent[i] = root
    if np.all(parent == np.arange(m)):
        return atoms, weights
    keep = parent == np.arange(m)
    merged = np.zeros(m)
    for i in range(m):
        root = i
        while parent[root] != root:
            root = parent[root]
        merged[root] += weights[i]
    return atoms[keep], merged[keep]


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Finitely many weighted atoms on P^n.

    Zero-weight atoms are dropped and atoms closer than sigma = 1e-14 are
    merged on construction, so atoms are pairwise distinct.
    """

    atoms: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        atoms = geo.as_coords(self.atoms)
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if w.size != atoms.shape[0]:
            raise DimensionMismatch(f"{atoms.shape[0]} atoms but {w.size} weights")
        if np.any(~np.isfinite(w)) or np.any(w < 0):
            raise ValueError("weights must be finite and nonnegative")
        keep = w > 0
        atoms, w = _merge_duplicates(atoms[keep], w[keep])
        atoms = np.ascontiguousarray(atoms)
        atoms.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, points):
        X = geo.as_coords(points)
        return cls(X, np.full(X.shape[0], 1.0 / X.shape[0]))

    @classmethod
    def dirac(cls, point, mass=1.0):
        return cls(geo.as_coords(point), [mass])

    @property
    def n(self):
        return self.atoms.shape[1] - 1

    @property
    def size(self):
        return self.atoms.shape[0]

    @property
    def total_mass(self):
        return math.fsum(self.weights.tolist())

    @property
    def is_probability(self):
        return abs(self.total_mass - 1.0) <= 1e-12

    def scaled(self, factor):
        return DiscreteMeasure(self.atoms, self.weights * factor)

    def __add__(self, other):
        if other.n != self.n:
            raise DimensionMismatch(f"P^{self.n} vs P^{other.n}")
        return DiscreteMeasure(np.vstack([self.atoms, other.atoms]),
                               np.concatenate([self.weights, other.weights]))

    def _key(self):
        return (self.atoms.tobytes(), self.weights.tobytes())


@dataclass
class EnergyEstimate:
    value: float
    stderr: float = None
    samples_used: int = 0
    rejected: int = 0

    def to_json(self):
        v = "inf" if math.isinf(self.value) else self.value
        return {"value": v, "stderr": self.stderr if self.stderr is not None else 0.0,
                "samples": self.samples_used}


def _require_atoms(mu):
    if mu.size == 0:
        raise EmptyMeasure("measure has no atoms of positive weight")


def potential(mu, zeta):
    """G_mu(zeta) = sum_i w_i G(zeta, a_i); -inf exactly on atoms."""
    _require_atoms(mu)
    Z = geo.as_coords(zeta)
    if Z.shape[1] != mu.atoms.shape[1]:
        raise DimensionMismatch(f"P^{Z.shape[1] - 1} vs P^{mu.n}")
    vals = potential_values(mu, Z)
    return float(vals[0]) if isinstance(zeta, geo.ProjectivePoint) else vals


def potential_values(mu, Z, block=2048):
    """Vectorized potential at the rows of Z."""
    Z = np.asarray(Z, dtype=np.complex128)
    out = np.empty(Z.shape[0])
    for start in range(0, Z.shape[0], block):
        K = geo.kernel_matrix(Z[start:start + block], mu.atoms)
        hit = np.isneginf(K)
        Kf = np.where(hit, 0.0, K)
        vals = Kf @ mu.weights
        vals[hit.any(axis=1)] = -np.inf
        out[start:start + block] = vals
    return out


def _cross_sum(mu, nu):
    """sum_{i,j} w_i v_j (-G(a_i, b_j)), +inf if any coincident pair."""
    K = geo.kernel_matrix(mu.atoms, nu.atoms)
    if np.isneginf(K).any():
        return math.inf
    return float(-(mu.weights @ K @ nu.weights))


def mutual_energy(mu, nu):
    """Exact double sum I(mu, nu); symmetric to the bit by canonical ordering."""
    _require_atoms(mu)
    _require_atoms(nu)
    if mu.n != nu.n:
        raise DimensionMismatch(f"P^{mu.n} vs P^{nu.n}")
    if nu._key() < mu._key():
        mu, nu = nu, mu
    return EnergyEstimate(max(0.0, _cross_sum(mu, nu)), None, mu.size * nu.size)


def energy(mu):
    """I(mu) = I(mu, mu); +inf for every measure with an atom."""
    _require_atoms(mu)
    return EnergyEstimate(math.inf, None, mu.size * mu.size)


def _offdiag_sum(mu):
    if mu.size < 2:
        return 0.0
    K = geo.kernel_matrix(mu.atoms)
    np.fill_diagonal(K, 0.0)
    return float(max(0.0, -(mu.weights @ K @ mu.weights)))


def offdiag_energy(mu):
    """sum_{i != j} w_i w_j (-G(a_i, a_j)), the discretized self-energy."""
    _require_atoms(mu)
    if mu.size < 2:
        raise SingleAtom("off-diagonal energy needs at least two atoms")
    return _offdiag_sum(mu)


def polarization_residual(mu, nu):
    """|I(mu+nu) - I(mu) - I(nu) - 2 I(mu,nu)| with off-diagonal self terms."""
    _require_atoms(mu)
    _require_atoms(nu)
    if mu.n != nu.n:
        raise DimensionMismatch(f"P^{mu.n} vs P^{nu.n}")
    S2 = geo.sigma2_matrix(mu.atoms, nu.atoms)
    if (S2 < geo.COINCIDENCE_SIGMA**2).any():
        raise SharedAtoms("mu and nu share an atom")
    both = mu + nu
    cross = mutual_energy(mu, nu).value
    return abs(_offdiag_sum(both) - _offdiag_sum(mu) - _offdiag_sum(nu) - 2.0 * cross)


def difference_energy(mu, nu):
    """Off-diagonal energy of the signed measure mu - nu (disjoint supports).

    Exploratory: whether this is always >= 0 for measures of equal mass is
    not known, so callers record its sign without asserting it.
    """
    return _offdiag_sum(mu) + _offdiag_sum(nu) - 2.0 * mutual_energy(mu, nu).value


# ---------------------------------------------------------------------------
# sampling


def fs_rows(rng, n, k):
    """k Fubini-Study distributed unit rows of C^{n+1} from normalized complex Gaussians."""
    g = rng.standard_normal((k, n + 1)) + 1j * rng.standard_normal((k, n + 1))
    return geo.normalize_rows(g)


def sample_fs(n, N, seed):
    """N points distributed by the normalized Fubini-Study volume of P^n."""
    if n < 1 or N < 1:
        raise ValueError("need n >= 1 and N >= 1")
    X = fs_rows(np.random.default_rng(seed), n, N)
    return [geo.ProjectivePoint(x) for x in X]


@dataclass(frozen=True)
class MeasureSampler:
    """A probability measure given by a sampling routine.

    ``sample(rng, k)`` returns a (k, n+1) array of unit rows; ``draw`` is the
    single-point form keyed by (seed, index).
    """

    n: int
    sample: callable = field(repr=False)
    description: str = ""

    def draw(self, seed, index):
        rng = np.random.default_rng([seed, index])
        return geo.ProjectivePoint(self.sample(rng, 1)[0])


def fs_sampler(n):
    return MeasureSampler(n, lambda rng, k: fs_rows(rng, n, k), f"Fubini-Study volume on P^{n}")


def dirac_sampler(point):
    row = geo.as_coords(point)[0]
    n = row.size - 1
    return MeasureSampler(n, lambda rng, k: np.repeat(row[None, :], k, axis=0), "Dirac mass")


def chunked_mc(pair_values, N, seed, chunk=MC_CHUNK):
    """Monte-Carlo mean of a pair integrand with deterministic chunked reduction.

    ``pair_values(rng, k)`` returns (values, n_rejected): k finite samples of
    the integrand and how many singular draws were discarded.  Each chunk has
    its own generator seeded by (seed, chunk index), and chunk results are
    combined in index order, so the estimate does not depend on the worker
    count.
    """
    sizes = [min(chunk, N - start) for start in range(0, N, chunk)]

    def run(idx):
        rng = np.random.default_rng([seed, idx])
        vals, rejected = pair_values(rng, sizes[idx])
        if vals is None:
            return 0.0, 0.0, 0, rejected
        return float(np.sum(vals)), float(np.sum(vals * vals)), vals.size, rejected

    parts = ordered_map(run, range(len(sizes)))
    total = math.fsum(p[0] for p in parts)
    total_sq = math.fsum(p[1] for p in parts)
    count = sum(p[2] for p in parts)
    rejected = sum(p[3] for p in parts)
    if count < N or rejected > 0.5 * (count + rejected):
        return EnergyEstimate(math.inf, math.inf, count, rejected)
    mean = total / count
    var = max(0.0, total_sq / count - mean * mean) * count / max(count - 1, 1)
    return EnergyEstimate(mean, math.sqrt(var / count), count, rejected)


def mc_energy(sampler, N, seed):
    """Monte-Carlo estimate of I(mu) for the measure behind ``sampler``.

    Draws N independent pairs and averages -G; pairs with sigma < 1e-14 are
    rejected and redrawn.  When more than half of all draws are singular the
    measure is treated as atomic and the estimate is +inf.
    """
    if N < 2:
        raise ValueError("N must be at least 2")
    thresh = geo.COINCIDENCE_SIGMA**2

    def pair_values(rng, k):
        kept = []
        have = 0
        rejected = 0
        while have < k:
            need = k - have
            X = sampler.sample(rng, need)
            Y = sampler.sample(rng, need)
            s2 = geo.sigma2_rows(X, Y)
            ok = s2 >= thresh
            rejected += int(need - ok.sum())
            if ok.any():
                kept.append(-0.5 * np.log(s2[ok]))
                have += int(ok.sum())
            if rejected > k:
                return None, rejected
        return np.concatenate(kept), rejected

    return chunked_mc(pair_values, N, seed)


# ---------------------------------------------------------------------------
# ball growth


def ball_mass_profile(mu, zeta, grid):
    """mu(B(zeta, r)) for each radius r of an increasing grid (closed balls)."""
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise UnsortedGrid("grid must be a nonempty 1-D sequence")
    if np.any(np.diff(grid) <= 0):
        raise UnsortedGrid("grid radii must be strictly increasing")
    if grid[0] <= 0 or grid[-1] > geo.DIAMETER + 1e-12:
        raise ValueError("grid radii must lie in (0, pi/sqrt 2]")
    _require_atoms(mu)
    Z = geo.as_coords(zeta)
    d = geo.distance_matrix(Z, mu.atoms)[0]
    order = np.argsort(d, kind="stable")
    d_sorted = d[order]
    cum = np.cumsum(mu.weights[order])
    total = mu.total_mass
    cum[-1] = total
    np.minimum(cum, total, out=cum)
    idx = np.searchsorted(d_sorted, grid, side="right")
    profile = np.where(idx > 0, cum[np.maximum(idx - 1, 0)], 0.0)
    profile[idx == d_sorted.size] = total
    return profile


def growth_kernel(s):
    """Layer-cake kernel (1/sqrt 2) cot(s / sqrt 2) on (0, pi/sqrt 2]."""
    s = np.asarray(s, dtype=float)
    return 1.0 / (geo.SQRT2 * np.tan(s / geo.SQRT2))


def default_growth_grid(mu, zeta, size=20001):
    d = geo.distance_matrix(geo.as_coords(zeta), mu.atoms)[0]
    lo = max(d.min() / 10.0, 1e-12)
    return np.geomspace(lo, geo.DIAMETER, size)


def potential_from_growth(mu, zeta, grid=None):
    """-G_mu(zeta) rebuilt from the ball-mass profile by the layer-cake formula.

    Integrates mu(B(zeta, s)) (1/sqrt 2) cot(s/sqrt 2) over (0, pi/sqrt 2] with
    the trapezoid rule on ``grid``.
    """
    _require_atoms(mu)
    Z = geo.as_coords(zeta)
    d = geo.distance_matrix(Z, mu.atoms)[0]
    if np.any(geo.sigma2_matrix(Z, mu.atoms)[0] < geo.COINCIDENCE_SIGMA**2):
        raise AtomCoincidence("zeta is an atom of mu; the potential is -inf there")
    if grid is None:
        grid = default_growth_grid(mu, zeta)
    grid = np.asarray(grid, dtype=float)
    if grid[0] > d.min() / 10.0 * (1 + 1e-9):
        raise ValueError("grid must resolve down to a tenth of the nearest atom distance")
    profile = ball_mass_profile(mu, zeta, grid)
    f = profile * growth_kernel(grid)
    f[-1] = 0.0 if np.isclose(grid[-1], geo.DIAMETER, rtol=0, atol=1e-12) else f[-1]
    return float(integrate.trapezoid(f, grid))


@dataclass
class GrowthCertificate:
    """mu(B(zeta, s)) <= C s^m held on the test grid; ``bound`` bounds -G_mu."""

    m: float
    C: float
    bound: float
    max_ratio: float
    max_atom_weight: float
    r_min: float


@dataclass
class GrowthFailure:
    """A witness (center, radius) where the growth condition fails."""

    m: float
    C: float
    center: np.ndarray
    radius: float
    mass: float
    allowed: float


def growth_bound(m, C):
    """C * int_0^{pi/sqrt 2} s^m (1/sqrt 2) cot(s/sqrt 2) ds."""
    val, _ = integrate.quad(lambda s: s**m * float(growth_kernel(s)), 0.0, geo.DIAMETER, limit=200)
    return C * val


def finite_energy_certificate(mu, m, C, centers=None, radii=None, r_min=0.05, seed=0):
    """Check the ball-growth bound mu(B(., s)) <= C s^m and return the potential bound.

    On success returns a GrowthCertificate with the uniform bound
    -G_mu <= C int s^m cot(s/sqrt2)/sqrt2 ds; otherwise a GrowthFailure holding
    the worst violation.  Radii below ``r_min`` are not tested: a point cloud
    always violates growth below its own resolution.
    """
    if m <= 0 or C <= 0:
        raise ValueError("need m > 0 and C > 0")
    _require_atoms(mu)
    if radii is None:
        radii = np.geomspace(r_min, geo.DIAMETER, 40)
    radii = np.asarray(radii, dtype=float)
    if centers is None:
        rng = np.random.default_rng([seed, 7])
        pick = mu.atoms
        if pick.shape[0] > 200:
            pick = pick[rng.choice(pick.shape[0], 200, replace=False)]
        centers = np.vstack([pick, fs_rows(rng, mu.n, 100)])
    centers = geo.as_coords(centers)
    D = geo.distance_matrix(centers, mu.atoms)
    allowed = C * radii**m
    worst = None
    for ci in range(centers.shape[0]):
        order = np.argsort(D[ci], kind="stable")
        cum = np.cumsum(mu.weights[order])
        idx = np.searchsorted(D[ci][order], radii, side="right")
        mass = np.where(idx > 0, cum[np.maximum(idx - 1, 0)], 0.0)
        ratio = mass / allowed
        k = int(np.argmax(ratio))
        if worst is None or ratio[k] > worst[0]:
            worst = (float(ratio[k]), ci, k, float(mass[k]))
    ratio, ci, k, mass = worst
    if ratio > 1.0:
        return GrowthFailure(m, C, centers[ci], float(radii[k]), mass, float(allowed[k]))
    return GrowthCertificate(m, C, growth_bound(m, C), ratio, float(mu.weights.max()), float(radii[0]))
