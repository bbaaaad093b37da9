"""Measures whose potential is -inf on a prescribed finite set.

The construction stacks uniform measures on Chebyshev-type configurations:
level h uses s_h points whose averaged potential is <= -2^h on all of E, and
mu_H = sum_{h <= H} 2^-h mu_{s_h}, renormalized to a probability measure.
On a finite snapshot the deep levels are reached only through atoms sitting
on E itself, which the certificate records separately.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from . import geometry as geo
from .chebyshev import chebyshev_value
from .errors import EmptySet, GridTooClose, LevelUnreachable
from .measures import DiscreteMeasure, fs_rows, potential_values

H_MAX = 30
DELTA_MIN = 1e-3


def chebyshev_configuration(E, s, restarts=4, seed=0):
    """s points of E (repetition allowed) maximizing the inner inf over E.

    Returns (points, level_value) where level_value = min over E of the
    averaged kernel sum, +inf when every point of E is one of the chosen points.
    """
    if not E.is_finite:
        raise ValueError("a finite snapshot of E is required")
    if E.points.shape[0] == 0:
        raise EmptySet("E has no points")
    if s < 1:
        raise ValueError("s must be at least 1")
    res = chebyshev_value(E, s, restarts=restarts, seed=seed)
    return res.maximizer_points, res.M_s


def _onset_potential(points, E):
    """max over E of the potential of the uniform measure on ``points`` (-inf if all of E is hit)."""
    mu = DiscreteMeasure(points, np.full(points.shape[0], 1.0 / points.shape[0]))
    vals = potential_values(mu, E.points)
    return float(vals.max())


@dataclass
class EvansCertificate:
    levels: list
    off_set_margin: float
    H: int
    onset_nonatom_max: float = None
    onset_nonatom_count: int = 0
    onset_atom_count: int = 0
    raw_mass: float = None
    grid_size: int = 0
    extra: dict = field(default_factory=dict)

    def to_json(self):
        def num(x):
            if x is None:
                return None
            return "-inf" if x == -math.inf else ("inf" if x == math.inf else x)

        return {
            "levels": [{"h": lv["h"], "s_h": lv["s_h"], "bound": num(lv["bound"])} for lv in self.levels],
            "off_set_margin": num(self.off_set_margin),
            "H": self.H,
        }


def offset_grid(E, size=500, delta_min=DELTA_MIN, seed=0):
    """FS-distributed points of P^n kept at distance >= 2*delta_min from E."""
    rng = np.random.default_rng([seed, 31337])
    out = []
    have = 0
    for _ in range(100):
        Y = fs_rows(rng, E.n, 2 * size)
        d = geo.distance_matrix(Y, E.points).min(axis=1)
        Y = Y[d >= 2 * delta_min]
        out.append(Y)
        have += Y.shape[0]
        if have >= size:
            break
    return np.vstack(out)[:size]


def evans_verify(mu, E, grid, delta_min=DELTA_MIN, levels=(), H=0, raw_mass=None):
    """Certificate for mu against the finite set E.

    off_set_margin = min over the grid of G_mu(zeta) - log d(zeta, E).  On E
    the potential is evaluated at every point; atoms of mu are counted apart.
    """
    if not E.is_finite:
        raise ValueError("a finite snapshot of E is required")
    T = geo.as_coords(grid)
    dist = geo.distance_matrix(T, E.points).min(axis=1)
    if (dist < delta_min).any():
        raise GridTooClose(f"grid point at distance {dist.min():.3g} < {delta_min:g} from E")
    margin = float(np.min(potential_values(mu, T) - np.log(dist)))
    on = potential_values(mu, E.points)
    is_atom = geo.sigma2_matrix(E.points, mu.atoms).min(axis=1) < geo.COINCIDENCE_SIGMA**2
    nonatom = on[~is_atom]
    return EvansCertificate(
        levels=list(levels), off_set_margin=margin, H=H,
        onset_nonatom_max=float(nonatom.max()) if nonatom.size else None,
        onset_nonatom_count=int(nonatom.size), onset_atom_count=int(is_atom.sum()),
        raw_mass=raw_mass, grid_size=int(T.shape[0]),
    )


def evans_construct(E, H=10, s_max=64, grid=None, seed=0, restarts=4):
    """Truncated construction mu_H with its certificate.

    For each level h the smallest s in the doubling sequence 1, 2, 4, ...
    whose configuration has averaged potential <= -2^h on E is taken.
    """
    if not E.is_finite:
        raise ValueError("a finite snapshot of E is required")
    if not 1 <= H <= H_MAX:
        raise ValueError(f"H must lie in 1..{H_MAX}")
    cache = {}

    def config(s):
        if s not in cache:
            cache[s] = chebyshev_configuration(E, s, restarts=restarts, seed=seed)
        return cache[s]

    s_list = []
    s = 1
    while s <= s_max:
        s_list.append(s)
        s *= 2
    atoms, weights, levels = [], [], []
    for h in range(1, H + 1):
        target = -(2.0**h)
        best = None
        chosen = None
        for s in s_list:
            pts, _ = config(s)
            bound = _onset_potential(pts, E)
            if best is None or bound < best:
                best = bound
            if bound <= target:
                chosen = (s, pts, bound)
                break
        if chosen is None:
            raise LevelUnreachable(f"level h={h} needs potential <= {target:g}; best {best:.4g} with s <= {s_max}",
                                   best=best)
        s, pts, bound = chosen
        levels.append({"h": h, "s_h": s, "bound": bound})
        atoms.append(pts)
        weights.append(np.full(s, 2.0**-h / s))
    w = np.concatenate(weights)
    raw_mass = math.fsum(w.tolist())
    mu = DiscreteMeasure(np.vstack(atoms), w / raw_mass)
    if grid is None:
        grid = offset_grid(E, seed=seed)
    cert = evans_verify(mu, E, grid, levels=levels, H=H, raw_mass=raw_mass)
    return mu, cert
