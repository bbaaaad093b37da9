import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from projcap import geometry as geo
from projcap.capacity import (
    capacity,
    disk_energy_mc,
    duality_check,
    energy_matrix,
    equilibrium_solve,
    frank_wolfe,
    monotone_limit_check,
    polarity_diagnostic,
    subadditivity_check,
    volume_bound_check,
)
from projcap.errors import CoincidentSamples, NonConvergence, TooFewPoints
from projcap.measures import fs_rows
from projcap.sets import ball, full_space, real_circle, seqlimit

C = np.array([1.0, 0.0], dtype=complex)


@pytest.fixture(scope="module")
def p1_result():
    return equilibrium_solve(full_space(1), 400, seed=0)


def test_energy_matrix_orthogonal_pair():
    A = energy_matrix(np.eye(2, dtype=complex))
    # nearest-neighbour sine distance 1, so the diagonal is -log(1/2)
    assert np.allclose(np.diag(A), math.log(2))
    assert A[0, 1] == 0.0 and A[1, 0] == 0.0


def test_energy_matrix_errors():
    with pytest.raises(TooFewPoints):
        energy_matrix(np.eye(2, dtype=complex)[:1])
    with pytest.raises(CoincidentSamples):
        energy_matrix(np.array([[1, 0], [1j, 0]], dtype=complex))


@given(st.integers(0, 2**32 - 1), st.integers(3, 30))
def test_frank_wolfe_simplex_and_monotone(seed, m):
    X = fs_rows(np.random.default_rng(seed), 1, m)
    w, f, gap, it, hist = frank_wolfe(energy_matrix(X), max_iters=2000, gap_tol=1e-10)
    assert np.all(w >= 0) and math.fsum(w) == pytest.approx(1.0, abs=1e-12)
    assert all(b <= a + 1e-12 * abs(a) for a, b in zip(hist, hist[1:]))
    assert gap >= 0


def test_frank_wolfe_matches_kkt_on_small_problem(rng):
    # for a positive definite A the simplex minimizer with full support is A^-1 1 / 1^T A^-1 1
    X = fs_rows(rng, 1, 6)
    A = energy_matrix(X)
    v = np.linalg.solve(A, np.ones(6))
    w, f, gap, _, _ = frank_wolfe(A, gap_tol=1e-12)
    if np.all(v > 0):
        assert f == pytest.approx(1.0 / v.sum(), rel=1e-9)


def test_p1_capacity(p1_result):
    r = p1_result
    assert r.fw_gap <= 1e-8 and r.converged
    assert r.gamma_hat == pytest.approx(0.5, abs=0.02)
    assert r.measure().is_probability


def test_real_circle_robin_constant_is_log2():
    # the real circle is a great circle of the sphere; its log capacity gives gamma = log 2
    r = equilibrium_solve(real_circle(), 400, seed=0)
    assert r.gamma_hat == pytest.approx(math.log(2), abs=0.01)


def test_nonconvergence_is_strict():
    with pytest.raises(NonConvergence):
        equilibrium_solve(full_space(1), 100, max_iters=3, strict=True)
    r = equilibrium_solve(full_space(1), 100, max_iters=3)
    assert not r.converged


def test_capacity_report_keys():
    gamma, kappa, rep = capacity(ball(C, 0.5), m=200, seed=0, fekete_s=8)
    for key in ("gamma_hat", "kappa_hat", "fw_gap", "m", "diag_rule", "cross_gap"):
        assert key in rep
    assert kappa == pytest.approx(math.exp(-gamma))
    assert rep["D_s"] <= rep["d2_bound"] + 1e-12


def test_duality(p1_result):
    d = duality_check(full_space(1), p1_result, n_trials=20, seed=0)
    assert d["I_star"] == pytest.approx(1.0, abs=1e-9)
    assert d["equality_ok"] and d["inequality_ok"]


def test_duality_overscale_is_excluded(p1_result):
    d = duality_check(full_space(1), p1_result, n_trials=10, seed=0, overscale=(2.0,))
    assert d["inequality_ok"]


def test_volume_bound_on_ball():
    r = volume_bound_check(ball(C, 0.5), m=200, N=50_000, seed=0)
    assert r["ok"]


def test_subadditivity_two_balls():
    r = subadditivity_check([ball(C, 0.3), ball(np.array([0, 1.0 + 0j]), 0.3)], m=200, seed=0)
    assert r["ok"]


def test_monotone_limit_shrinking_balls():
    r = monotone_limit_check(C, [0.8, 0.6, 0.5, 0.48], m=150, seed=0, rel_tol=0.1)
    assert r["direction"] == -1 and r["monotone_ok"]


def disk_energy_quad():
    # I = E[-log sigma] for two uniform points of the unit disk in the chart, via the
    # rotation-reduced triple integral over (rho1, rho2, phi)
    def f(phi, r2, r1):
        num = r1**2 + r2**2 - 2 * r1 * r2 * math.cos(phi)
        den = (1 + r1**2) * (1 + r2**2)
        return -0.5 * math.log(num / den) * (2 * r1) * (2 * r2) / (2 * math.pi) * 2

    val, _ = integrate.tplquad(f, 0, 1, 0, 1, 0, math.pi, epsabs=1e-7)
    return val


def test_disk_energy_oracle():
    oracle = disk_energy_quad()
    assert oracle == pytest.approx(0.25 + 2 * math.log(2) - 1, abs=1e-5)
    est = disk_energy_mc(100_000, seed=0)
    assert abs(est.value - oracle) <= 5 * est.stderr


def test_polarity_diagnostic_separates_finite_from_continuum():
    fin = polarity_diagnostic(seqlimit(19), m_list=(20, 20))
    cont = polarity_diagnostic(full_space(1), m_list=(100, 400))
    assert fin["diverging"] and not cont["diverging"]


def test_finite_sets_flagged_polar():
    assert equilibrium_solve(seqlimit(9), 50).polar_suspect
