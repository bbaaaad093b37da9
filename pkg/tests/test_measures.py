import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from projcap import geometry as geo
from projcap.errors import AtomCoincidence, DimensionMismatch, UnsortedGrid
from projcap.measures import (
    DiscreteMeasure,
    GrowthCertificate,
    GrowthFailure,
    ball_mass_profile,
    difference_energy,
    energy,
    finite_energy_certificate,
    fs_rows,
    fs_sampler,
    mc_energy,
    mutual_energy,
    offdiag_energy,
    polarization_residual,
    potential,
    potential_from_growth,
)


def fs_energy_quad(n):
    # |<x,y>|^2 ~ Beta(1, n) for independent FS points, so sigma^2 has density n t^(n-1)
    val, _ = integrate.quad(lambda t: -0.5 * math.log(t) * n * t ** (n - 1), 0.0, 1.0)
    return val


@pytest.mark.parametrize("n", [1, 2, 3])
def test_fs_energy_matches_quadrature(n):
    est = mc_energy(fs_sampler(n), 200_000, seed=3)
    assert abs(est.value - fs_energy_quad(n)) <= 5 * est.stderr


def test_fs_rows_overlap_law(rng):
    # |<x, e0>|^2 is Beta(1, n): mean 1/(n+1)
    X = fs_rows(rng, 2, 200_000)
    assert np.mean(np.abs(X[:, 0]) ** 2) == pytest.approx(1 / 3, abs=3e-3)


def test_mc_is_seed_deterministic():
    a = mc_energy(fs_sampler(1), 10_000, seed=9)
    b = mc_energy(fs_sampler(1), 10_000, seed=9)
    assert a.value == b.value and a.stderr == b.stderr


def test_discrete_energy_is_infinite_and_offdiag_finite(rng):
    mu = DiscreteMeasure.uniform(fs_rows(rng, 1, 5))
    assert energy(mu).value == math.inf
    assert math.isfinite(offdiag_energy(mu))


def test_merge_duplicates():
    a = np.array([1.0, 2.0 + 1j])
    mu = DiscreteMeasure(np.vstack([a, a * 1j, [0, 1]]), [0.25, 0.25, 0.5])
    assert mu.size == 2
    assert mu.total_mass == pytest.approx(1.0)


def test_measure_validation():
    with pytest.raises(DimensionMismatch):
        DiscreteMeasure(np.eye(2, dtype=complex), [1.0])
    with pytest.raises(ValueError):
        DiscreteMeasure(np.eye(2, dtype=complex), [1.0, -0.5])


@given(st.integers(0, 2**32 - 1), st.integers(1, 3), st.integers(1, 6), st.integers(1, 6))
def test_polarization_identity(seed, n, ka, kb):
    g = np.random.default_rng(seed)
    X = fs_rows(g, n, ka + kb)
    mu = DiscreteMeasure(X[:ka], g.random(ka) + 0.01)
    nu = DiscreteMeasure(X[ka:], g.random(kb) + 0.01)
    assert polarization_residual(mu, nu) < 1e-10


def test_mutual_energy_symmetric(rng):
    mu = DiscreteMeasure.uniform(fs_rows(rng, 2, 4))
    nu = DiscreteMeasure.uniform(fs_rows(rng, 2, 7))
    assert mutual_energy(mu, nu).value == pytest.approx(mutual_energy(nu, mu).value, abs=1e-14)


def test_potential_at_atom_is_minus_infinity(rng):
    X = fs_rows(rng, 1, 3)
    mu = DiscreteMeasure.uniform(X)
    assert potential(mu, geo.ProjectivePoint(X[0])) == -math.inf
    with pytest.raises(AtomCoincidence):
        potential_from_growth(mu, geo.ProjectivePoint(X[0]))


@given(st.integers(0, 2**32 - 1), st.integers(1, 3))
def test_layer_cake_recovers_potential(seed, n):
    g = np.random.default_rng(seed)
    mu = DiscreteMeasure(fs_rows(g, n, 20), g.dirichlet(np.ones(20)))
    z = geo.ProjectivePoint(fs_rows(g, n, 1)[0])
    direct = potential(mu, z)
    # potential_from_growth returns -G_mu
    assert potential_from_growth(mu, z) == pytest.approx(-direct, rel=1e-2, abs=1e-6)


def test_ball_mass_profile(rng):
    mu = DiscreteMeasure.uniform(np.array([[1, 0], [0, 1]], dtype=complex))
    z = geo.ProjectivePoint(np.array([1, 0j]))
    prof = ball_mass_profile(mu, z, [0.1, geo.DIAMETER])
    assert list(prof) == pytest.approx([0.5, 1.0])
    with pytest.raises(UnsortedGrid):
        ball_mass_profile(mu, z, [0.5, 0.1])


def test_growth_certificate_outcomes(rng):
    X = fs_rows(rng, 1, 400)
    spread = DiscreteMeasure.uniform(X)
    # FS ball mass sin^2(s/sqrt2) <= s^2/2; test above the cloud resolution
    cert = finite_energy_certificate(spread, m=2, C=2.0, r_min=0.3, seed=0)
    assert isinstance(cert, GrowthCertificate)
    assert math.isfinite(cert.bound)
    dirac = DiscreteMeasure.dirac(X[0])
    assert isinstance(finite_energy_certificate(dirac, m=2, C=4.0), GrowthFailure)


def test_difference_energy_sign_is_recorded(rng):
    # positive definiteness of the kernel is not asserted; the observed sign is printed
    signs = []
    for _ in range(20):
        X = fs_rows(rng, 1, 16)
        mu = DiscreteMeasure(X[:8], rng.dirichlet(np.ones(8)))
        nu = DiscreteMeasure(X[8:], rng.dirichlet(np.ones(8)))
        signs.append(np.sign(difference_energy(mu, nu)))
    print(f"difference energy signs: {signs.count(1.0)} positive, {signs.count(-1.0)} negative")
    assert all(np.isfinite(signs))
