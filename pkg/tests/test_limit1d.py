import numpy as np
import pytest
from hypothesis import given
import hypothesis.strategies as st
from hypothesis.extra.numpy import arrays

from nhfiber.limit1d import (FiberForces, FiberProblem, PHomogeneousForm, QuadraticForm, TupleField,
                             fiber_energy, fit_p_homogeneous, isotropic_cf_matrix, isotropic_fiber_problem,
                             large_force_profiles, solve_fiber)
from nhfiber.cell import torsion_constant
from nhfiber.geometry import make_cross_section
from nhfiber.regimes import RegimeReport

D = make_cross_section("disc")
vec3 = arrays(float, 3, elements=st.floats(-2, 2))


def test_quadratic_form_rejects_asymmetric():
    with pytest.raises(ValueError):
        QuadraticForm(np.array([[1.0, 2.0], [0.0, 1.0]]))


@given(vec3, st.floats(0.1, 5))
def test_p_form_homogeneous(x, t):
    F = PHomogeneousForm(np.diag([1.0, 2.0, 3.0]), 1.5)
    X = x[None, :]
    assert F.value(t * X)[0] == pytest.approx(t**1.5 * F.value(X)[0], rel=1e-10, abs=1e-12)


def test_p_form_gradient_matches_difference(rng):
    F = PHomogeneousForm(np.array([[2.0, 0.3], [0.3, 1.0]]), 1.5)
    X = rng.normal(size=(4, 2))
    H = rng.normal(size=(4, 2))
    t = 1e-6
    fd = (F.value(X + t * H, True) - F.value(X - t * H, True)) / (2 * t)
    assert np.allclose(np.sum(F.grad(X) * H, axis=1), fd, rtol=1e-6)


def test_fit_recovers_exact_form():
    K = np.array([[2.0, 0.5, 0.0], [0.5, 1.0, 0.2], [0.0, 0.2, 3.0]])
    fit = fit_p_homogeneous(lambda x: (x @ K @ x) ** 0.75, 3, 1.5)
    assert np.allclose(fit.K, K, atol=1e-10)


def test_problem_validation():
    g = np.linspace(0, 1, 5)
    gh = QuadraticForm(np.eye(2))
    cf = QuadraticForm(np.eye(3))
    with pytest.raises(ValueError):
        FiberProblem("nowhere", g, gh, cf, np.zeros((5, 3)))
    with pytest.raises(ValueError):
        FiberProblem("finite_k", g[::-1], gh, cf, np.zeros((5, 3)))
    with pytest.raises(ValueError):
        FiberProblem("finite_k", g, gh, cf, np.zeros((4, 3)))
    with pytest.raises(ValueError):
        FiberProblem("finite_k", g, gh, cf, np.zeros((5, 3)), theta_free=True)
    trivial = RegimeReport(0.0, 0.0, 1.0, 2.0, "trivial", "quadratic", False, "symbolic", None)
    with pytest.raises(ValueError):
        FiberProblem.from_regime(trivial, g, gh, cf, np.zeros((5, 3)))


@pytest.fixture(scope="module")
def kappa_problem():
    F = FiberForces.zero(40)
    F.beta0_mean[:] = 1.0
    F.a0_mean[:] = 0.5
    F.g0_mean[:, 0] = 0.3
    return isotropic_fiber_problem("finite_kappa", 1.0, 1.0, 2.0, D, n=40, forces=F, closed_form=True, m=0.5)


def test_zero_data_gives_zero_solution():
    fp = isotropic_fiber_problem("finite_k", n=20, closed_form=True, m=0.5)
    t = solve_fiber(fp)
    assert np.abs(t.table()[:, 1:]).max() == 0.0


def test_solution_is_linear_in_forces(kappa_problem):
    t1 = solve_fiber(kappa_problem)
    fp2 = isotropic_fiber_problem("finite_kappa", 1.0, 1.0, 2.0, D, n=40, forces=kappa_problem.forces.scaled(2.0),
                                  closed_form=True, m=0.5)
    t2 = solve_fiber(fp2)
    assert np.allclose(t2.table()[:, 1:], 2 * t1.table()[:, 1:], atol=1e-12)


def test_minimizer_beats_perturbations(kappa_problem):
    t = solve_fiber(kappa_problem)
    E = fiber_energy(kappa_problem, t)
    rng = np.random.default_rng(5)
    for _ in range(10):
        d = TupleField.zeros(t.grid)
        d.v[1:, :2] = 1e-2 * rng.normal(size=(len(t.grid) - 1, 2))
        d.v_slope[1:] = 1e-2 * rng.normal(size=(len(t.grid) - 1, 2))
        d.w[1:] = 1e-2 * rng.normal(size=len(t.grid) - 1)
        d.delta[1:] = 1e-2 * rng.normal(size=len(t.grid) - 1)
        trial = TupleField(t.grid, t.v + d.v, t.theta, t.w + d.w, t.delta + d.delta, t.v_slope + d.v_slope)
        assert fiber_energy(kappa_problem, trial) >= E - 1e-12 * abs(E)


def test_large_force_parabola():
    n = 60
    F = FiberForces.zero(n)
    F.beta0_mean[:] = 1.0
    fp = isotropic_fiber_problem("finite_kappa", 1.0, 1.0, 2.0, D, n=n, forces=F, closed_form=True, m=0.5)
    t = solve_fiber(fp)
    delta, _ = large_force_profiles(fp.tau, D, 2.0, 1.0, 1.0, 0.5, 1.0, 0.0, fp.grid)
    assert np.abs(t.delta - delta).max() <= 1e-3 * np.abs(delta).max()


def test_cf_matrix_entries():
    K = isotropic_cf_matrix(1.0, 1.0)
    # nu = 1/4 -> 4 pi (3/4) / 2
    assert K[0, 0] == pytest.approx(1.5 * np.pi)
    assert K[2, 2] == pytest.approx(np.pi)
    assert torsion_constant(D, h=0.1) == pytest.approx(0.5, abs=5e-3)
