import numpy as np
import pytest
from hypothesis import given
import hypothesis.strategies as st

from nhfiber.energy import isotropic, norton_hoff, p_norm
from nhfiber.fem import (ConvergenceError, Discretization, SingularProblemError, assemble_energy,
                         capacity_constraints, minimize, neumann_constraints, rigid_motion, strain_operator)
from nhfiber.geometry import make_cross_section, mesh_annulus, mesh_cell

D = make_cross_section("disc")
MESH = mesh_annulus(D, 3.0, 0.3)


def _strains(mesh, u):
    B = strain_operator(mesh)
    loc = u[mesh.triangles].reshape(len(mesh.triangles), 9)
    return np.einsum("mij,mj->mi", B, loc)


@given(st.lists(st.floats(-2, 2), min_size=3, max_size=3), st.floats(-2, 2))
def test_rigid_motions_have_zero_strain(a, zeta):
    u = rigid_motion(MESH.vertices, a, zeta, 2.0)
    assert np.abs(_strains(MESH, u)).max() < 1e-12


def test_out_of_plane_rotation_gives_constant_shear():
    # without the axial derivative only four rigid modes survive; tilting
    # leaves a uniform transverse shear
    u = rigid_motion(MESH.vertices, np.zeros(3), np.array([0.7, -0.3, 0.0]), 2.0)
    e = _strains(MESH, u)
    assert np.allclose(e, [0, 0, 0, 0, 0.15, 0.35])


def test_linear_patch_gives_constant_strain(rng):
    G = rng.normal(size=(3, 2))
    u = MESH.vertices @ G.T
    e = _strains(MESH, u)
    want = np.array([G[0, 0], G[1, 1], 0.0, 0.5 * (G[0, 1] + G[1, 0]), 0.5 * G[2, 0], 0.5 * G[2, 1]])
    assert np.allclose(e, want)


def test_pure_neumann_without_gauge_is_refused():
    m = mesh_cell(D, 0.3)
    n = m.n_vertices
    from nhfiber.fem import ConstraintSet
    with pytest.raises(SingularProblemError):
        Discretization(m, ConstraintSet(np.zeros(n, bool), np.zeros(n, bool)))


def test_gauge_allows_neumann_setup():
    m = mesh_cell(D, 0.3)
    disc = Discretization(m, neumann_constraints(m))
    # three translations and one in-plane rotation are pinned
    assert disc.pins.sum() == 4


def test_quadratic_minimizer_is_stationary():
    f = isotropic(1.0, 1.0)
    F = assemble_energy(f, MESH, capacity_constraints(MESH, [1.0, 0.5, -0.2], 0.3, 2.0))
    fld, val, diag = minimize(F)
    g = F.gradient(fld.free)
    assert np.linalg.norm(g) < 1e-9 * (1 + val)
    assert diag.method == "linear"
    # any perturbation raises the energy
    rng = np.random.default_rng(0)
    for _ in range(5):
        assert F.value(fld.free + 1e-3 * rng.normal(size=F.n_free)) > val


@pytest.mark.parametrize("f", [p_norm(1.0, 3.0), norton_hoff(1.0, 0.5, 1.5)])
def test_newton_converges_for_nonquadratic(f):
    F = assemble_energy(f, MESH, capacity_constraints(MESH, [1.0, 0.0, 0.5], 0.5, 2.0))
    fld, val, diag = minimize(F)
    assert diag.converged and diag.method == "newton"
    rng = np.random.default_rng(1)
    for _ in range(5):
        assert F.value(fld.free + 1e-3 * rng.normal(size=F.n_free)) >= val - 1e-10 * val


def test_newton_failure_raises_with_history():
    F = assemble_energy(p_norm(1.0, 3.0), MESH, capacity_constraints(MESH, [1.0, 0.0, 0.0], 0.0, 2.0))
    with pytest.raises(ConvergenceError) as exc:
        minimize(F, max_iter=1, tol=1e-300)
    assert exc.value.x is not None and len(exc.value.history) >= 1


def test_mean_constraint_is_met():
    m = mesh_cell(D, 0.25)
    F = assemble_energy(isotropic(1.0, 1.0), m, capacity_constraints(m, [0.0, 0.0, 0.0], 0.0, 2.0))
    # prescribe nothing but vertices on S; a mean target through the multiplier path
    F.mean_constraint = np.array([0.1, -0.2, 0.3])
    fld, _, _ = minimize(F)
    C, c0 = F.mean_operator()
    assert np.allclose(C @ fld.free + c0, F.mean_constraint, atol=1e-10)
