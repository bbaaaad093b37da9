"""Fubini-Study geometry of complex projective space and the projective log kernel.

Points of P^n are stored as unit vectors of C^{n+1}.  Two vectors differing by
a nonzero complex factor are the same point; that quotient is handled by the
distance functions, never by a canonical form.

The sine distance sigma(p, q) = |p ^ q| / (|p| |q|) equals sin(d(p, q) / sqrt 2)
for the Fubini-Study geodesic distance d, and the kernel is G = log sigma.
"""
from dataclasses import dataclass

import numpy as np

from .errors import (
    ChartMismatch,
    ChartUndefined,
    DimensionMismatch,
    IndexOutOfRange,
    ZeroVector,
)

SQRT2 = np.sqrt(2.0)
DIAMETER = np.pi / SQRT2
NEG_INFINITY = -np.inf

# sigma below this is treated as coincidence (G = -inf)
COINCIDENCE_SIGMA = 1e-14
_COINCIDENCE_SIGMA2 = COINCIDENCE_SIGMA**2
# below this value of 1 - |<p,q>|^2 the Gram shortcut loses too many digits and
# the residual |q - <p,q> p|^2 is used instead
_CANCELLATION_SIGMA2 = 1e-2


@dataclass(frozen=True, eq=False)
class ProjectivePoint:
    """A point of P^n held as a unit-norm homogeneous coordinate vector."""

    coords: np.ndarray

    def __post_init__(self):
        c = np.array(self.coords, dtype=np.complex128).reshape(-1)
        if c.size < 2:
            raise DimensionMismatch("a point of P^n needs at least 2 homogeneous coordinates")
        norm = np.linalg.norm(c)
        if not norm >= 1e-300:
            raise ZeroVector("cannot normalize a (numerically) zero vector")
        if abs(norm - 1.0) > 1e-14:  # unit rows pass through untouched
            c = c / norm
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    @property
    def dim(self):
        return self.coords.size - 1

    def __repr__(self):
        inner = ":".join(f"{z.real:.6g}{z.imag:+.6g}j" for z in self.coords)
        return f"ProjectivePoint([{inner}])"


@dataclass(frozen=True)
class AffinePoint:
    """Affine coordinates z = phi_j(zeta) of a point in the chart {zeta_j != 0}."""

    z: tuple
    chart: int

    def __post_init__(self):
        z = tuple(complex(v) for v in np.asarray(self.z, dtype=np.complex128).reshape(-1))
        if not all(np.isfinite(v.real) and np.isfinite(v.imag) for v in z):
            raise ValueError("affine coordinates must be finite")
        object.__setattr__(self, "z", z)
        if not 0 <= self.chart <= len(z):
            raise IndexOutOfRange(f"chart {self.chart} out of range for n={len(z)}")

    @property
    def dim(self):
        return len(self.z)

    def as_array(self):
        return np.array(self.z, dtype=np.complex128)


def normalize(raw):
    """Return the ProjectivePoint represented by the nonzero vector ``raw``."""
    v = np.asarray(raw, dtype=np.complex128).reshape(-1)
    norm = np.linalg.norm(v)
    if not norm >= 1e-300:
        raise ZeroVector("cannot normalize a (numerically) zero vector")
    return ProjectivePoint(v / norm)


def normalize_rows(raw):
    """Row-normalize an (m, n+1) array of homogeneous vectors."""
    v = np.asarray(raw, dtype=np.complex128)
    norms = np.linalg.norm(v, axis=-1, keepdims=True)
    if np.any(~(norms >= 1e-300)):
        raise ZeroVector("cannot normalize a (numerically) zero vector")
    return v / norms


def as_coords(points):
    """Coerce a ProjectivePoint, a sequence of them, or an array to unit rows."""
    if isinstance(points, ProjectivePoint):
        return points.coords[None, :]
    if isinstance(points, np.ndarray):
        arr = np.asarray(points, dtype=np.complex128)
        if arr.ndim == 1:
            arr = arr[None, :]
        return normalize_rows(arr)
    rows = [p.coords if isinstance(p, ProjectivePoint) else normalize(p).coords for p in points]
    if not rows:
        raise ValueError("empty point list")
    dims = {r.size for r in rows}
    if len(dims) != 1:
        raise DimensionMismatch(f"points of mixed dimension {sorted(dims)}")
    return np.vstack(rows)


def _check_dims(p, q):
    if p.coords.size != q.coords.size:
        raise DimensionMismatch(f"P^{p.dim} vs P^{q.dim}")


def _canonical_pair(a, b):
    """Order two coordinate vectors lexicographically (re, im interleaved)."""
    ka = np.column_stack([a.real, a.imag]).ravel()
    kb = np.column_stack([b.real, b.imag]).ravel()
    diff = np.nonzero(ka != kb)[0]
    if diff.size and kb[diff[0]] < ka[diff[0]]:
        return b, a
    return a, b


def _sigma2_pair(a, b):
    """Squared sine distance of two unit vectors, accurate near coincidence."""
    a, b = _canonical_pair(a, b)
    c = np.vdot(a, b)
    s2 = 1.0 - (c.real * c.real + c.imag * c.imag)
    if s2 < _CANCELLATION_SIGMA2:
        r = b - c * a
        s2 = float(np.vdot(r, r).real)
    return max(s2, 0.0)


def wedge_norm(p, q):
    """|p ^ q| = sqrt(|p|^2 |q|^2 - |<p,q>|^2) for the stored (unit) representatives."""
    _check_dims(p, q)
    return float(np.sqrt(_sigma2_pair(p.coords, q.coords)))


def sine_distance(p, q):
    """sigma(p, q) = sin(d(p, q) / sqrt 2), in [0, 1]; invariant under rescaling."""
    _check_dims(p, q)
    return min(1.0, float(np.sqrt(_sigma2_pair(p.coords, q.coords))))


def geodesic_distance(p, q):
    """Fubini-Study geodesic distance, in [0, pi/sqrt 2]."""
    return float(SQRT2 * np.arcsin(sine_distance(p, q)))


def kernel_G(p, q):
    """Projective logarithmic kernel log sigma(p, q); -inf at coincidence."""
    _check_dims(p, q)
    s2 = _sigma2_pair(p.coords, q.coords)
    if s2 < _COINCIDENCE_SIGMA2:
        return NEG_INFINITY
    return min(0.0, 0.5 * float(np.log(s2)))


# ---------------------------------------------------------------------------
# vectorized forms on (m, n+1) arrays of unit rows


def _residual_sigma2(X, Y, c):
    """|y - c x|^2 for paired unit rows, with c = <x, y> already known."""
    R = Y - c[:, None] * X
    return np.sum(R.real**2 + R.imag**2, axis=-1)


def sigma2_matrix(X, Y=None, chunk=1 << 17):
    """Matrix of squared sine distances between rows of X and rows of Y.

    With ``Y`` omitted the result is the symmetric X-vs-X matrix, filled from
    the upper triangle so it is symmetric to the bit.
    """
    X = np.asarray(X, dtype=np.complex128)
    same = Y is None
    Y = X if same else np.asarray(Y, dtype=np.complex128)
    if X.shape[-1] != Y.shape[-1]:
        raise DimensionMismatch(f"P^{X.shape[-1] - 1} vs P^{Y.shape[-1] - 1}")
    C = X.conj() @ Y.T
    S2 = 1.0 - (C.real**2 + C.imag**2)
    rows, cols = np.nonzero(S2 < _CANCELLATION_SIGMA2)
    if same:
        keep = rows < cols
        rows, cols = rows[keep], cols[keep]
    for start in range(0, rows.size, chunk):
        r = rows[start:start + chunk]
        k = cols[start:start + chunk]
        S2[r, k] = _residual_sigma2(X[r], Y[k], C[r, k])
    np.maximum(S2, 0.0, out=S2)
    if same:
        iu = np.triu_indices(S2.shape[0], 1)
        S2[(iu[1], iu[0])] = S2[iu]
        np.fill_diagonal(S2, 0.0)
    return S2


def sigma2_rows(X, Y):
    """Row-wise squared sine distance between X[k] and Y[k]."""
    X = np.asarray(X, dtype=np.complex128)
    Y = np.asarray(Y, dtype=np.complex128)
    if X.shape != Y.shape:
        raise DimensionMismatch(f"shapes {X.shape} vs {Y.shape}")
    c = np.einsum("ij,ij->i", X.conj(), Y)
    s2 = 1.0 - (c.real**2 + c.imag**2)
    bad = np.nonzero(s2 < _CANCELLATION_SIGMA2)[0]
    if bad.size:
        s2[bad] = _residual_sigma2(X[bad], Y[bad], c[bad])
    return np.maximum(s2, 0.0)


def log_from_sigma2(S2):
    """Kernel values 0.5*log(S2), with -inf below the coincidence threshold."""
    S2 = np.asarray(S2, dtype=float)
    out = np.full(S2.shape, NEG_INFINITY)
    ok = S2 >= _COINCIDENCE_SIGMA2
    out[ok] = np.minimum(0.5 * np.log(S2[ok]), 0.0)
    return out


def kernel_matrix(X, Y=None):
    """Matrix of G(X_i, Y_j); symmetric to the bit when ``Y`` is omitted."""
    return log_from_sigma2(sigma2_matrix(X, Y))


def sine_matrix(X, Y=None):
    return np.minimum(np.sqrt(sigma2_matrix(X, Y)), 1.0)


def distance_matrix(X, Y=None):
    return SQRT2 * np.arcsin(sine_matrix(X, Y))


# ---------------------------------------------------------------------------
# charts


def affine_lift(a):
    """Inverse chart map: insert 1 at position ``a.chart`` and normalize."""
    z = a.as_array()
    raw = np.insert(z, a.chart, 1.0 + 0.0j)
    return normalize(raw)


def chart_coords(p, j):
    """Affine coordinates of ``p`` in chart j: zeta_k / zeta_j for k != j."""
    if not 0 <= j <= p.dim:
        raise IndexOutOfRange(f"chart {j} out of range for P^{p.dim}")
    pivot = p.coords[j]
    if abs(pivot) <= 1e-12:
        raise ChartUndefined(f"coordinate {j} vanishes; point lies outside chart {j}")
    z = np.delete(p.coords, j) / pivot
    return AffinePoint(tuple(z), j)


def _wedge2_affine(z, w):
    """|z ^ w|^2 as the sum of squared 2x2 minors (no cancellation)."""
    n = z.shape[-1]
    total = np.zeros(np.broadcast_shapes(z.shape[:-1], w.shape[:-1]))
    for i in range(n):
        for k in range(i + 1, n):
            m = z[..., i] * w[..., k] - z[..., k] * w[..., i]
            total = total + (m.real**2 + m.imag**2)
    return total


def normalized_kernel_values(z, w):
    """Vectorized N(z, w) for arrays of affine coordinates of shape (..., n)."""
    z = np.asarray(z, dtype=np.complex128)
    w = np.asarray(w, dtype=np.complex128)
    d = z - w
    num = np.sum(d.real**2 + d.imag**2, axis=-1) + _wedge2_affine(z, w)
    den = (1.0 + np.sum(np.abs(z) ** 2, axis=-1)) * (1.0 + np.sum(np.abs(w) ** 2, axis=-1))
    return log_from_sigma2(num / den)


def normalized_kernel_N(z, w):
    """N(z, w) = (1/2) log[(|z-w|^2 + |z^w|^2) / ((1+|z|^2)(1+|w|^2))]."""
    if z.chart != w.chart:
        raise ChartMismatch(f"charts {z.chart} and {w.chart} differ")
    if z.dim != w.dim:
        raise DimensionMismatch(f"C^{z.dim} vs C^{w.dim}")
    return float(normalized_kernel_values(z.as_array(), w.as_array()))


def chart_swap(p, j, k):
    """Exchange homogeneous coordinates j and k (the map psi_{j,k})."""
    n = p.dim
    if not (0 <= j <= n and 0 <= k <= n):
        raise IndexOutOfRange(f"swap ({j}, {k}) out of range for P^{n}")
    if j == k:
        raise IndexOutOfRange(f"swap needs two distinct indices, got ({j}, {k})")
    c = np.array(p.coords)
    c[[j, k]] = c[[k, j]]
    return ProjectivePoint(c)


def swap_distortion(p, q, j, k):
    """sigma(p, swap(q)) - sigma(p, q): how far a one-sided swap moves the distance."""
    return sine_distance(p, chart_swap(q, j, k)) - sine_distance(p, q)


def hopf_map(X):
    """Map unit rows of C^2 to the unit sphere in R^3 (stereographic correspondence)."""
    X = np.asarray(X, dtype=np.complex128)
    if X.shape[-1] != 2:
        raise DimensionMismatch("the sphere correspondence is defined on P^1 only")
    z0, z1 = X[..., 0], X[..., 1]
    c = np.conj(z0) * z1
    return np.stack([2 * c.real, 2 * c.imag, np.abs(z1) ** 2 - np.abs(z0) ** 2], axis=-1)


def canonical_phase(X):
    """Multiply each row by a unit phase making its first non-negligible entry real positive."""
    X = np.array(X, dtype=np.complex128, copy=True)
    if X.ndim == 1:
        return canonical_phase(X[None, :])[0]
    for r in range(X.shape[0]):
        row = X[r]
        idx = np.nonzero(np.abs(row) > 1e-12)[0]
        if idx.size:
            z = row[idx[0]]
            X[r] = row * (np.conj(z) / abs(z))
            X[r, idx[0]] = abs(z)
    return X


def canonical_order(X):
    """Rows after phase fixing, sorted lexicographically by (re, im) entries."""
    Y = canonical_phase(X)
    keys = np.column_stack([np.column_stack([Y[:, i].real, Y[:, i].imag]) for i in range(Y.shape[1])])
    order = np.lexsort(keys.T[::-1])
    return Y[order]
