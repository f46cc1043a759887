import numpy as np
import pytest
from hypothesis import given
import hypothesis.strategies as st
from hypothesis.extra.numpy import arrays

from nhfiber.energy import (aniso_example, eval as f_eval, gradient, hessian_action, isotropic, norton_hoff,
                            p_norm, planar_sym_gradient, quadratic_form, random_sym, sym_to_voigt, voigt_to_sym)

sym6 = arrays(float, 6, elements=st.floats(-3, 3))


def _sym(m):
    return voigt_to_sym(np.asarray(m))


def test_voigt_roundtrip(rng):
    M = random_sym(rng, 5)
    assert np.allclose(voigt_to_sym(sym_to_voigt(M)), M)


def test_isotropic_closed_form(rng):
    f = isotropic(0.7, 1.3)
    M = random_sym(rng, 10)
    tr = np.trace(M, axis1=1, axis2=2)
    want = 0.35 * tr**2 + 1.3 * np.einsum("nij,nij->n", M, M)
    assert np.allclose(f_eval(f, M), want)


@pytest.mark.parametrize("f", [isotropic(1.0, 1.0), p_norm(1.5, 3.0), norton_hoff(1.0, 0.5, 1.5), aniso_example()])
def test_gradient_matches_finite_difference(f, rng):
    M = random_sym(rng, 1)[0] + np.eye(3) * 0.3
    H = random_sym(rng, 1)[0]
    t = 1e-6
    fd = (f_eval(f, M + t * H) - f_eval(f, M - t * H)) / (2 * t)
    assert np.sum(gradient(f, M) * H) == pytest.approx(float(fd), rel=1e-6, abs=1e-8)


@pytest.mark.parametrize("f", [isotropic(2.0, 0.5), p_norm(1.0, 3.0), norton_hoff(1.0, 0.5, 1.5)])
def test_hessian_matches_gradient_difference(f, rng):
    M = random_sym(rng, 1)[0] + np.eye(3) * 0.5
    H = random_sym(rng, 1)[0]
    t = 1e-6
    fd = (gradient(f, M + t * H) - gradient(f, M - t * H)) / (2 * t)
    assert np.allclose(hessian_action(f, M, H), fd, rtol=1e-5, atol=1e-7)


@given(sym6, sym6, st.floats(0, 1))
def test_convexity_along_segments(a, b, t):
    for f in (isotropic(1.0, 1.0), p_norm(1.0, 1.5), norton_hoff(1.0, 0.3, 1.5), p_norm(1.0, 3.0)):
        mid = f.value(t * a + (1 - t) * b)
        assert mid <= t * f.value(a) + (1 - t) * f.value(b) + 1e-9 * (1 + abs(mid))


@given(sym6, st.floats(0.1, 10))
def test_p_homogeneity(m, s):
    f = p_norm(2.0, 1.5)
    assert f.value(s * m) == pytest.approx(s**1.5 * f.value(m), rel=1e-10, abs=1e-12)


@given(sym6)
def test_growth_bounds(m):
    for f in (isotropic(1.0, 2.0), aniso_example(), norton_hoff(1.0, 0.5, 1.5).recession()):
        c, C = f.growth_constants()
        n = float(np.sqrt(np.sum(np.array([1, 1, 1, 2, 2, 2]) * m * m)))
        v = float(f.value(m))
        assert c * n**f.p - 1e-9 <= v <= C * n**f.p + 1e-9


def test_recession_of_norton_hoff_is_p_norm():
    f = norton_hoff(1.2, 0.7, 1.5).recession()
    m = np.array([0.3, -0.1, 0.0, 0.2, 0.0, 0.4])
    # the smooth part grows like d |m|^p too, so the weight is c + d
    want = 1.9 * np.sum(np.array([1, 1, 1, 2, 2, 2]) * m * m) ** 0.75
    assert float(f.value(m)) == pytest.approx(want)


def test_tangent_at_zero_drops_smooth_part():
    f = norton_hoff(1.2, 0.7, 1.5).tangent_at_zero()
    assert f.kind == "p_norm" and f.params["c"] == 1.2


def test_invalid_densities_rejected():
    with pytest.raises(ValueError):
        p_norm(1.0, 1.0)
    with pytest.raises(ValueError):
        norton_hoff(1.0, 0.5, 2.5)
    with pytest.raises(ValueError):
        quadratic_form(-np.eye(6))
    with pytest.raises(ValueError):
        quadratic_form(np.arange(36.0).reshape(6, 6))


def test_planar_sym_gradient_shape_and_rigid_kernel():
    # in-plane rotation plus constant axial field: zero planar strain
    J = np.array([[0.0, -1.0], [1.0, 0.0], [0.0, 0.0]])
    assert np.allclose(planar_sym_gradient(None, J), 0.0)
    J = np.array([[0.0, 0.0], [0.0, 0.0], [2.0, 4.0]])
    E = planar_sym_gradient(None, J)
    assert E[0, 2] == 1.0 and E[1, 2] == 2.0 and E[2, 2] == 0.0
