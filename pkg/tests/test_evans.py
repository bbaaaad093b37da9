import math

import numpy as np
import pytest

from projcap.errors import GridTooClose, LevelUnreachable
from projcap.evans import evans_construct, evans_verify, offset_grid
from projcap.measures import DiscreteMeasure
from projcap.sets import finite_set, seqlimit

# log sigma - log d = log(sin(d/sqrt2)/d), smallest at the diameter
MARGIN_FLOOR = math.log(math.sqrt(2) / math.pi)


def test_single_point():
    E = finite_set(np.array([[1, 0]], dtype=complex))
    mu, cert = evans_construct(E, H=5)
    assert mu.size == 1
    assert all(lv["s_h"] == 1 and lv["bound"] == -math.inf for lv in cert.levels)
    assert MARGIN_FLOOR - 1e-12 <= cert.off_set_margin <= -0.5 * math.log(2)


def test_orthogonal_pair():
    E = finite_set(np.eye(2, dtype=complex))
    mu, cert = evans_construct(E, H=4)
    assert np.allclose(mu.weights, 0.5)
    assert all(lv["bound"] <= -(2.0 ** lv["h"]) for lv in cert.levels)
    assert math.isfinite(cert.off_set_margin)


def test_sequence_with_limit():
    E = seqlimit(19)
    mu, cert = evans_construct(E, H=3, grid=offset_grid(E, 200))
    assert mu.is_probability
    assert [lv["h"] for lv in cert.levels] == [1, 2, 3]
    assert all(lv["bound"] <= -(2.0 ** lv["h"]) for lv in cert.levels)
    assert cert.off_set_margin >= MARGIN_FLOOR - 1e-9


def test_grid_too_close():
    E = seqlimit(5)
    mu = DiscreteMeasure.uniform(E.points)
    with pytest.raises(GridTooClose):
        evans_verify(mu, E, E.points[:1])


def test_offset_grid_distance():
    from projcap import geometry as geo

    E = seqlimit(19)
    G = offset_grid(E, 300, delta_min=0.01)
    assert G.shape[0] == 300
    assert geo.distance_matrix(G, E.points).min() >= 0.02


def test_unreachable_level():
    with pytest.raises(LevelUnreachable) as exc:
        evans_construct(seqlimit(19), H=2, s_max=1)
    assert exc.value.best > -2


def test_validation():
    with pytest.raises(ValueError):
        evans_construct(seqlimit(3), H=31)
