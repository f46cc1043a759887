import math

import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from nhfiber.capacity import (CapacityQuery, CapacitySolver, InconsistentLadderError, capacity, capacity_density,
                              capacity_plane_limit, isotropic_annulus_capacities, radial_p_capacity)
from nhfiber.energy import isotropic, norton_hoff, p_norm
from nhfiber.geometry import make_cross_section, mesh_annulus

D = make_cross_section("disc")
MESH = mesh_annulus(D, 4.0, 0.1)


@pytest.fixture(scope="module")
def iso_solver():
    return CapacitySolver(isotropic(1.0, 1.0), MESH, 2.0)


def test_zero_motion_costs_nothing(iso_solver):
    assert iso_solver.value(np.zeros(3), 0.0) == 0.0


def test_isotropic_annulus_against_closed_form(iso_solver):
    exact = isotropic_annulus_capacities(1.0, 1.0, 1.0, 4.0)
    # conforming elements on a polygonal annulus: close to the exact value
    assert iso_solver.value([1, 0, 0]) == pytest.approx(exact["inplane"], rel=0.01)
    assert iso_solver.value([0, 1, 0]) == pytest.approx(exact["inplane"], rel=0.01)
    assert iso_solver.value([0, 0, 1]) == pytest.approx(exact["antiplane"], rel=0.01)
    assert iso_solver.value([0, 0, 0], 1.0) == pytest.approx(exact["torsion"], rel=0.01)


def test_polarized_matrix_is_diagonal_for_disc(iso_solver):
    K = iso_solver.matrix()
    off = K - np.diag(np.diag(K))
    assert np.abs(off).max() < 1e-3 * np.abs(K).max()
    assert np.all(np.linalg.eigvalsh(K) > 0)


@given(st.floats(0.1, 3.0), st.lists(st.floats(-1, 1), min_size=4, max_size=4))
@settings(max_examples=10)
def test_homogeneity_quadratic(iso_solver, t, x):
    a, z = np.array(x[:3]), x[3]
    base = iso_solver.value(a, z)
    assert iso_solver.value(t * a, t * z) == pytest.approx(t * t * base, rel=1e-9, abs=1e-12)


def test_homogeneity_p3():
    s = CapacitySolver(p_norm(1.0, 3.0), mesh_annulus(D, 3.0, 0.3), 2.0)
    a = np.array([0.3, -0.4, 0.5])
    assert s.value(2 * a, 0.2) == pytest.approx(8 * s.value(a, 0.1), rel=1e-7)


def test_radial_closed_form():
    # known value at p = 3 on 1 < r < 2
    assert radial_p_capacity(3.0, 1.0, 2.0) == pytest.approx((0.5 / (math.sqrt(2) - 1)) ** 2)
    assert radial_p_capacity(3.0, 1.0, 2.0) == pytest.approx(1.4571, abs=1e-4)
    assert radial_p_capacity(2.0, 1.0, math.e) == pytest.approx(1.0)


def test_capacity_query_helper():
    res = capacity(CapacityQuery(isotropic(1.0, 1.0), D, np.array([0.0, 0.0, 1.0]), R=2.0, h=0.2))
    assert res.value > 0 and res.domain_R == 2.0


def test_ladder_refuses_increase(monkeypatch):
    import nhfiber.capacity as cap
    monkeypatch.setattr(cap, "_ladder_values", lambda *args: np.array([1.0, 1.1]))
    with pytest.raises(InconsistentLadderError):
        capacity_plane_limit(norton_hoff(1.0, 0.5, 1.5), D, [1, 0, 0], 0.0, (4, 8))


def test_density_branches():
    f = isotropic(1.0, 1.0)
    assert capacity_density(f, D, 0.0).branch == "zero"
    assert capacity_density(p_norm(1.0, 3.0), D, 1.0).branch == "indicator"
    ind = capacity_density(p_norm(1.0, 3.0), D, 1.0)
    assert ind([0, 0, 0]) == 0.0 and math.isinf(ind([1, 0, 0]))
    assert capacity_density(norton_hoff(1.0, 0.5, 1.5), D, 1.0).branch == "plane"


@pytest.mark.slow
def test_quadratic_density_charges_rotation():
    c = capacity_density(isotropic(1.0, 1.0), D, 2.0, h=0.2, ks=(8,))
    assert math.isinf(c([0, 0, 0], 1.0))
    v = c([1.0, 0, 0])
    assert v > 0 and c([2.0, 0, 0]) == pytest.approx(4 * v)
