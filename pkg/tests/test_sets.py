import math

import numpy as np
import pytest

from projcap import geometry as geo
from projcap.capacity import fs_volume
from projcap.sets import ball, disk_slice, distinct_samples, finite_set, full_space, real_circle, seqlimit, union

C = np.array([1.0, 0.0], dtype=complex)


@pytest.mark.parametrize("E", [full_space(1), full_space(2), ball(C, 0.3), ball(C, 1.5),
                               real_circle(), disk_slice(1.0), union([ball(C, 0.2), ball(np.array([0, 1.0 + 0j]), 0.2)])],
                         ids=lambda E: E.label)
def test_samples_land_in_set(E):
    X = distinct_samples(E, 300, np.random.default_rng(0))
    assert X.shape == (300, E.n + 1)
    assert np.all(E.contains(X))
    assert np.allclose(np.linalg.norm(X, axis=1), 1.0)


@pytest.mark.parametrize("r", [0.3, 0.8, 1.5])
def test_ball_volume_closed_form(r):
    # FS ball of radius r in P^1 has normalized volume sin^2(r / sqrt 2)
    E = ball(C, r)
    vol, se = fs_volume(E, 200_000, seed=1)
    assert vol == pytest.approx(math.sin(r / math.sqrt(2)) ** 2, abs=5 * se + 1e-12)
    assert E.volume == pytest.approx(math.sin(r / math.sqrt(2)) ** 2)


def test_ball_contains_boundary_and_not_outside():
    E = ball(C, 0.5)
    inside = geo.normalize_rows(np.array([[1.0, math.tan(0.49 / math.sqrt(2))]], dtype=complex))
    outside = geo.normalize_rows(np.array([[1.0, math.tan(0.51 / math.sqrt(2))]], dtype=complex))
    assert E.contains(inside)[0] and not E.contains(outside)[0]


def test_finite_sets_use_all_points():
    E = seqlimit(19)
    assert E.is_finite and E.points.shape[0] == 20
    X = distinct_samples(E, 400, np.random.default_rng(0))
    assert X.shape[0] == 20


def test_finite_set_dedupes():
    E = finite_set(np.array([[1, 0], [2j, 0], [0, 1]], dtype=complex))
    assert E.points.shape[0] == 2


def test_disk_slice_radius():
    E = disk_slice(1.0)
    # geodesic radius of {|z| <= R} about [1:0:0]
    assert E.diameter == pytest.approx(2 * math.sqrt(2) * math.asin(1 / math.sqrt(2)))


def test_real_circle_points_are_real_up_to_phase():
    X = distinct_samples(real_circle(), 50, np.random.default_rng(2))
    assert np.allclose(np.abs(np.sum(X**2, axis=1)), 1.0)
