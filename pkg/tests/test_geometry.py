import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from projcap import geometry as geo
from projcap.errors import ChartMismatch, ChartUndefined, DimensionMismatch, IndexOutOfRange, ZeroVector

from strategies import point_pairs, raw_vectors, unitaries

P = geo.ProjectivePoint


def test_orthogonal_points_are_at_maximal_distance():
    p, q = P(np.array([1, 0j])), P(np.array([0, 1j]))
    assert geo.sine_distance(p, q) == 1.0
    assert geo.kernel_G(p, q) == 0.0
    assert geo.geodesic_distance(p, q) == pytest.approx(math.pi / math.sqrt(2))


def test_coincident_points():
    p = P(np.array([1.0, 2.0 + 1j]))
    q = P(np.array([1.0, 2.0 + 1j]) * (3 - 4j))
    assert geo.sine_distance(p, q) == pytest.approx(0.0, abs=1e-15)
    assert geo.kernel_G(p, q) == -math.inf


def test_45_degrees():
    p, q = P(np.array([1, 0j])), P(np.array([1, 1 + 0j]))
    assert geo.sine_distance(p, q) == pytest.approx(math.sqrt(0.5))
    assert geo.kernel_G(p, q) == pytest.approx(-0.5 * math.log(2))


@given(point_pairs())
def test_sine_distance_bounds_and_symmetry(pq):
    p, q = P(pq[0]), P(pq[1])
    s = geo.sine_distance(p, q)
    assert 0.0 <= s <= 1.0
    assert s == pytest.approx(geo.sine_distance(q, p), abs=1e-14)
    assert geo.kernel_G(p, q) <= 0.0


@given(point_pairs(), st.complex_numbers(min_magnitude=0.1, max_magnitude=10))
def test_scale_invariance(pq, lam):
    p, q = P(pq[0]), P(pq[1])
    assert geo.sine_distance(P(lam * pq[0]), q) == pytest.approx(geo.sine_distance(p, q), abs=1e-12)


@given(st.data())
def test_unitary_invariance(data):
    n = data.draw(st.integers(1, 3))
    a, b, U = data.draw(raw_vectors(n)), data.draw(raw_vectors(n)), data.draw(unitaries(n))
    s0 = geo.sine_distance(P(a), P(b))
    s1 = geo.sine_distance(P(U @ a), P(U @ b))
    assert s1 == pytest.approx(s0, abs=1e-12)


@given(st.data())
def test_triangle_inequality(data):
    n = data.draw(st.integers(1, 3))
    a, b, c = (P(data.draw(raw_vectors(n))) for _ in range(3))
    d = geo.geodesic_distance
    assert d(a, c) <= d(a, b) + d(b, c) + 1e-9


@given(point_pairs())
def test_sine_is_sandwiched_by_rescaled_geodesic(pq):
    # sin x between 2x/pi and x on [0, pi/2]
    p, q = P(pq[0]), P(pq[1])
    x = geo.geodesic_distance(p, q) / math.sqrt(2)
    s = geo.sine_distance(p, q)
    assert 2 * x / math.pi - 1e-12 <= s <= x + 1e-12


@given(point_pairs())
def test_sphere_chord_is_twice_sine(pq):
    # independent oracle on P^1: Hopf image on the unit sphere, chord length 2 sigma
    a, b = pq
    if a.size != 2:
        return
    h = geo.hopf_map(geo.normalize_rows(np.vstack([a, b])))
    chord = float(np.linalg.norm(h[0] - h[1]))
    assert chord == pytest.approx(2 * geo.sine_distance(P(a), P(b)), abs=1e-10)


def test_near_coincident_accuracy():
    # residual recomputation keeps relative accuracy near the diagonal
    eps = 1e-9
    a = np.array([1.0, 0.0j])
    b = np.array([1.0, eps + 0j])
    assert geo.sine_distance(P(a), P(b)) == pytest.approx(eps / math.sqrt(1 + eps**2), rel=1e-8)


def test_matrix_forms_agree_with_scalar(rng):
    X = geo.normalize_rows(rng.normal(size=(30, 3)) + 1j * rng.normal(size=(30, 3)))
    S = geo.sine_matrix(X)
    G = geo.kernel_matrix(X)
    assert np.allclose(S, S.T)
    for i, j in [(0, 1), (5, 17), (29, 3)]:
        assert S[i, j] == pytest.approx(geo.sine_distance(P(X[i]), P(X[j])), abs=1e-14)
        assert G[i, j] == pytest.approx(geo.kernel_G(P(X[i]), P(X[j])), abs=1e-13)
    assert np.all(np.isneginf(np.diag(G)))


@given(st.data())
def test_chart_kernel_matches_lift(data):
    n = data.draw(st.integers(1, 3))
    j = data.draw(st.integers(0, n))
    z = data.draw(raw_vectors(n))[:n]
    w = data.draw(raw_vectors(n))[:n]
    az, aw = geo.AffinePoint(tuple(z), j), geo.AffinePoint(tuple(w), j)
    lifted = geo.kernel_G(geo.affine_lift(az), geo.affine_lift(aw))
    N = geo.normalized_kernel_N(az, aw)
    if math.isinf(lifted):
        assert math.isinf(N)
    else:
        assert N == pytest.approx(lifted, abs=1e-11)


@given(raw_vectors())
def test_chart_coords_roundtrip(v):
    p = P(v)
    j = int(np.argmax(np.abs(p.coords)))
    back = geo.affine_lift(geo.chart_coords(p, j))
    assert geo.sine_distance(p, back) < 1e-7


@given(st.data())
def test_chart_swap_is_an_isometry(data):
    n = data.draw(st.integers(1, 3))
    a, b = P(data.draw(raw_vectors(n))), P(data.draw(raw_vectors(n)))
    j, k = data.draw(st.sampled_from([(i, l) for i in range(n + 1) for l in range(n + 1) if i != l]))
    s = geo.sine_distance(geo.chart_swap(a, j, k), geo.chart_swap(b, j, k))
    assert s == pytest.approx(geo.sine_distance(a, b), abs=1e-12)


def test_errors():
    with pytest.raises(ZeroVector):
        geo.normalize(np.zeros(3))
    with pytest.raises(DimensionMismatch):
        geo.sine_distance(P(np.array([1, 0j])), P(np.array([1, 0, 0j])))
    with pytest.raises(ChartUndefined):
        geo.chart_coords(P(np.array([0, 1j])), 0)
    with pytest.raises(ChartMismatch):
        geo.normalized_kernel_N(geo.AffinePoint((0j,), 0), geo.AffinePoint((0j,), 1))
    with pytest.raises(IndexOutOfRange):
        geo.chart_swap(P(np.array([1, 0j])), 0, 0)


def test_canonical_order_is_phase_and_permutation_invariant(rng):
    X = geo.normalize_rows(rng.normal(size=(6, 2)) + 1j * rng.normal(size=(6, 2)))
    phases = np.exp(2j * np.pi * rng.random(6))[:, None]
    Y = (X * phases)[rng.permutation(6)]
    assert np.allclose(geo.canonical_order(X), geo.canonical_order(Y))
