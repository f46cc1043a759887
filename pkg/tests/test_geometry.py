import math

import numpy as np
import pytest
from hypothesis import given
import hypothesis.strategies as st

from nhfiber.geometry import (INNER_S, OUTER_V, make_cross_section, mesh_annulus, mesh_cell,
                              mesh_periodic_cell, read_mesh, refine, regular_polygon, write_mesh)


def test_disc_moments():
    D = make_cross_section("disc")
    assert D.area == pytest.approx(math.pi)
    assert D.diameter == pytest.approx(2.0)
    assert np.allclose(D.centroid, 0.0)
    assert D.mean_sq_radius == pytest.approx(0.5)


def test_square_is_centered_and_normalized():
    Q = make_cross_section("square")
    assert Q.area == pytest.approx(1.0)
    assert np.allclose(Q.centroid, 0.0, atol=1e-14)
    assert Q.diameter == pytest.approx(math.sqrt(2.0))
    # mean |y|^2 over the unit square is 1/6
    assert Q.mean_sq_radius == pytest.approx(1.0 / 6.0)


def test_bad_polygons_rejected():
    with pytest.raises(ValueError):
        make_cross_section([[0, 0], [1, 0]])
    with pytest.raises(ValueError):
        make_cross_section([[0, 0], [1, 0], [2, 0]])
    with pytest.raises(ValueError):
        make_cross_section([[0, 0], [1, 1], [1, 0], [0, 1]])  # bow tie
    with pytest.raises(ValueError):
        make_cross_section("hexagon-ish")


def test_clockwise_input_is_reoriented():
    cw = make_cross_section([[0, 0], [0, 1], [1, 1], [1, 0]])
    ccw = make_cross_section([[0, 0], [1, 0], [1, 1], [0, 1]])
    assert cw.area == pytest.approx(ccw.area)
    assert cw.area > 0


@given(st.integers(3, 12), st.floats(0.2, 5.0))
def test_polygon_area_scales_quadratically(n, t):
    P = regular_polygon(n)
    assert P.scaled(t).area == pytest.approx(t * t * P.area, rel=1e-12)


def _tri_area_sum(mesh):
    return float(mesh.areas.sum())


@pytest.mark.parametrize("R", [2.0, 4.0, 16.0])
def test_annulus_area_and_tags(R):
    D = make_cross_section("disc")
    m = mesh_annulus(D, R, 0.2)
    m.check()
    # polygonal approximation of pi (R^2 - 1)
    assert _tri_area_sum(m) == pytest.approx(math.pi * (R * R - 1), rel=2e-2)
    r = np.linalg.norm(m.vertices, axis=1)
    assert np.allclose(r[m.mask(INNER_S)], 1.0)
    assert np.allclose(r[m.mask(OUTER_V)], R)


def test_annulus_around_square_section():
    Q = make_cross_section("square")
    m = mesh_annulus(Q, 3.0, 0.15)
    m.check()
    assert np.all(Q.contains(m.vertices[m.mask(INNER_S)], tol=1e-9))


def test_refine_quarters_triangles():
    D = make_cross_section("disc")
    m = mesh_cell(D, 0.3)
    m2 = refine(m)
    m2.check()
    assert m2.n_triangles == 4 * m.n_triangles
    assert _tri_area_sum(m2) >= _tri_area_sum(m) - 1e-12


def test_periodic_cell_pairs_opposite_sides():
    m = mesh_periodic_cell(make_cross_section("disc", 0.3), 0.1)
    m.check()
    master = m.master_of
    slaves = np.flatnonzero(master >= 0)
    assert len(slaves) > 0
    d = m.vertices[slaves] - m.vertices[master[slaves]]
    # every slave sits a lattice vector away from its master
    assert np.allclose(d, np.round(d), atol=1e-12)
    assert np.all(np.abs(d).sum(axis=1) >= 1 - 1e-12)


def test_mesh_roundtrip(tmp_path):
    m = mesh_annulus(make_cross_section("disc"), 2.0, 0.3)
    path = tmp_path / "m.txt"
    write_mesh(m, path)
    back = read_mesh(path)
    assert np.array_equal(back.vertices, m.vertices)
    assert np.array_equal(back.triangles, m.triangles)
    assert np.array_equal(back.tags, m.tags)
