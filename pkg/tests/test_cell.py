import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from nhfiber.cell import (CellLoad, CellSolver, SoftCellSolver, aniso_cell_matrix, solve_neumann,
                          torsion_constant)
from nhfiber.energy import isotropic, norton_hoff
from nhfiber.geometry import make_cross_section, mesh_cell

D = make_cross_section("disc")


@pytest.fixture(scope="module")
def iso_k():
    return CellSolver(isotropic(1.0, 1.0), D, 2.0, "finite_k", h=0.1)


def test_zero_load(iso_k):
    assert iso_k.value(CellLoad("finite_k")) == 0.0


def test_isotropic_finite_k_form(iso_k):
    K = iso_k.quadratic_form()
    # stretching: k times half the Young modulus; twist: k * 2 mu m / d^2 with m close to 1/2
    assert K[0, 0] == pytest.approx(2.0 * 1.25, rel=1e-10)
    assert K[1, 1] == pytest.approx(2.0 * 0.25, rel=5e-3)
    assert abs(K[0, 1]) < 1e-10


@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(0.1, 3))
@settings(max_examples=10)
def test_quadratic_scaling(iso_k, a, beta, t):
    base = iso_k.value(CellLoad("finite_k", a=a, beta=beta))
    assert iso_k.value(CellLoad("finite_k", a=t * a, beta=t * beta)) == pytest.approx(t * t * base, rel=1e-8,
                                                                                         abs=1e-12)


def test_trial_field_is_never_better(iso_k):
    load = CellLoad("finite_k", a=0.3, beta=1.0)
    res = iso_k.solve(load)
    rng = np.random.default_rng(3)
    for _ in range(5):
        trial = res.minimizer.values + 0.01 * rng.normal(size=res.minimizer.values.shape)
        assert iso_k.energy_of(load, trial) >= res.ghom_value - 1e-12


def test_bending_cross_term_vanishes_for_disc():
    s = CellSolver(isotropic(1.0, 1.0), D, 1.0, "finite_kappa", h=0.1)
    K = s.quadratic_form()
    assert abs(K[0, 1]) < 1e-4 * K[0, 0]
    assert K[0, 0] == pytest.approx(K[1, 1], rel=1e-3)


def test_load_validation():
    with pytest.raises(ValueError):
        CellLoad("finite_k", zeta1=1.0)
    with pytest.raises(ValueError):
        CellLoad("bogus")
    with pytest.raises(ValueError):
        CellLoad("finite_k", a=np.nan)
    with pytest.raises(ValueError):
        CellSolver(isotropic(1.0, 1.0), D, 0.0)


def test_load_vector_roundtrip():
    L = CellLoad("finite_kappa", a=0.1, beta=0.2, zeta1=0.3, zeta2=0.4)
    assert CellLoad.from_vector("finite_kappa", L.vector()) == L


def test_neumann_incompatible_data_rejected():
    m = mesh_cell(D, 0.2)
    with pytest.raises(ValueError):
        solve_neumann(m, 1.0, lambda y, n: np.zeros(len(y)))


def test_neumann_recovers_quadratic():
    m = mesh_cell(D, 0.1)
    sol = solve_neumann(m, 1.0, lambda y, n: 0.5 * np.sum(y * n, axis=1))
    want = 0.25 * np.sum(m.vertices**2, axis=1)
    err = sol.phi - want
    err -= np.average(err, weights=m.lumped_weights)
    assert np.abs(err).max() < 5e-3


def test_torsion_constant_disc():
    assert torsion_constant(D, h=0.05) == pytest.approx(0.5, abs=2e-3)


def test_aniso_cell_structure():
    res = aniso_cell_matrix(D, 2.0, h=0.1)
    C = res.C
    assert np.allclose(C, C.T, atol=1e-12)
    scale = np.abs(C).max()
    assert abs(C[0, 3]) < 1e-3 * scale and abs(C[2, 3]) < 1e-3 * scale
    assert C[3, 3] == pytest.approx(4 * C[1, 3], rel=1e-2)
    # the stretching entry of this density is three quarters of kappa
    assert C[2, 2] == pytest.approx(0.75 * 2.0, rel=1e-2)


def test_soft_cell_positive_and_homogeneous():
    f = norton_hoff(1.0, 0.5, 1.5)
    s = SoftCellSolver(f, make_cross_section("disc", 0.3), h=0.15)
    v = s.value([1.0, 0.0, 0.0], 0.0)
    assert v > 0
    # the recession density is 1.5-homogeneous, so is the cell energy
    assert s.value([2.0, 0.0, 0.0], 0.0) == pytest.approx(2**1.5 * v, rel=1e-6)
