"""Cross-sections, structured ring triangulations and mesh refinement.

All meshes are built from closed rings of points around the origin (the
centroid of the fiber section).  Consecutive rings are stitched by walking
both of them by polar angle, which works for any pair of star-shaped rings
and lets the point count vary from ring to ring.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

INTERIOR, INNER_S, OUTER_V, PERIODIC_MASTER, PERIODIC_SLAVE = range(5)
TAG_NAMES = ("interior", "inner_S", "outer_V", "periodic_master", "periodic_slave")
TWO_PI = 2.0 * np.pi


def _cross(u, v):
    return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]


def _segments_intersect(p1, p2, q1, q2) -> bool:
    d1 = _cross(q2 - q1, p1 - q1)
    d2 = _cross(q2 - q1, p2 - q1)
    d3 = _cross(p2 - p1, q1 - p1)
    d4 = _cross(p2 - p1, q2 - p1)
    return (d1 * d2 < 0) and (d3 * d4 < 0)


@dataclass(frozen=True)
class CrossSection:
    """A planar fiber section with its centroid at the origin.

    Either ``radius`` is set (a disc) or ``vertices`` holds a counter-clockwise
    simple polygon.  Geometric moments are exact for both.
    """

    name: str
    radius: float | None = None
    vertices: np.ndarray | None = field(default=None, repr=False)

    @property
    def is_disc(self) -> bool:
        return self.radius is not None

    @cached_property
    def area(self) -> float:
        if self.is_disc:
            return float(np.pi * self.radius**2)
        v = self.vertices
        return float(0.5 * np.sum(_cross(v, np.roll(v, -1, axis=0))))

    @cached_property
    def centroid(self) -> np.ndarray:
        if self.is_disc:
            return np.zeros(2)
        return _polygon_centroid(self.vertices)

    @cached_property
    def diameter(self) -> float:
        if self.is_disc:
            return 2.0 * self.radius
        v = self.vertices
        d = v[:, None, :] - v[None, :, :]
        return float(np.sqrt(np.max(np.sum(d * d, axis=-1))))

    @cached_property
    def second_moments(self) -> np.ndarray:
        """Area averages of y_i y_j."""
        if self.is_disc:
            return 0.25 * self.radius**2 * np.eye(2)
        x, y = self.vertices.T
        xn, yn = np.roll(x, -1), np.roll(y, -1)
        c = x * yn - xn * y
        ixx = np.sum(c * (x * x + x * xn + xn * xn)) / 12.0
        iyy = np.sum(c * (y * y + y * yn + yn * yn)) / 12.0
        ixy = np.sum(c * (x * yn + 2 * x * y + 2 * xn * yn + xn * y)) / 24.0
        return np.array([[ixx, ixy], [ixy, iyy]]) / self.area

    @property
    def mean_sq_radius(self) -> float:
        return float(np.trace(self.second_moments))

    @property
    def tau(self) -> float:
        return 2.0 * self.mean_sq_radius / self.diameter

    @cached_property
    def perimeter(self) -> float:
        if self.is_disc:
            return TWO_PI * self.radius
        v = self.vertices
        return float(np.sum(np.linalg.norm(np.roll(v, -1, axis=0) - v, axis=1)))

    @cached_property
    def corner_angles(self) -> np.ndarray:
        if self.is_disc:
            return np.zeros(0)
        v = self.vertices
        return np.mod(np.arctan2(v[:, 1], v[:, 0]), TWO_PI)

    def is_star_shaped(self) -> bool:
        """True when every edge is seen from the origin with positive orientation."""
        if self.is_disc:
            return True
        v = self.vertices
        return bool(np.all(_cross(v, np.roll(v, -1, axis=0)) > 0))

    def radial(self, theta) -> np.ndarray:
        """Distance from the origin to the boundary along the ray at ``theta``."""
        theta = np.mod(np.asarray(theta, dtype=float), TWO_PI)
        if self.is_disc:
            return np.full(theta.shape, self.radius)
        if not self.is_star_shaped():
            raise ValueError(f"{self.name} is not star-shaped about its centroid")
        v = self.vertices
        ang = self.corner_angles
        order = np.argsort(ang)
        vs, angs = v[order], ang[order]
        idx = np.searchsorted(angs, theta, side="right") - 1
        i0 = np.mod(idx, len(vs))
        i1 = np.mod(idx + 1, len(vs))
        p0, e = vs[i0], vs[i1] - vs[i0]
        d = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        return _cross(p0, e) / _cross(d, e)

    def boundary_points(self, h: float, min_points: int = 16) -> np.ndarray:
        """Counter-clockwise boundary samples with spacing about ``h``.

        Discs give inscribed regular polygons; polygons keep all corners.
        """
        if self.is_disc:
            n = max(min_points, int(np.ceil(TWO_PI * self.radius / h)))
            t = TWO_PI * np.arange(n) / n
            return self.radius * np.stack([np.cos(t), np.sin(t)], axis=1)
        return _sample_polygon(self.vertices, h)

    def contains(self, points, tol: float = 1e-9) -> np.ndarray:
        """Closed-set membership for points in the plane."""
        p = np.atleast_2d(points)
        r = np.hypot(p[:, 0], p[:, 1])
        theta = np.arctan2(p[:, 1], p[:, 0])
        return r <= self.radial(theta) * (1 + tol) + tol

    def contains_unit_disc(self, tol: float = 1e-9) -> bool:
        if self.is_disc:
            return self.radius >= 1 - tol
        v = self.vertices
        e = np.roll(v, -1, axis=0) - v
        dist = _cross(e, -v) / np.linalg.norm(e, axis=1)
        return bool(np.all(-dist >= 1 - tol))

    def scaled(self, t: float) -> "CrossSection":
        if self.is_disc:
            return CrossSection(f"{self.name}*{t:g}", radius=self.radius * t)
        return CrossSection(f"{self.name}*{t:g}", vertices=self.vertices * t)


def _polygon_centroid(v: np.ndarray) -> np.ndarray:
    vn = np.roll(v, -1, axis=0)
    c = _cross(v, vn)
    a = 0.5 * np.sum(c)
    return np.array([np.sum((v[:, 0] + vn[:, 0]) * c), np.sum((v[:, 1] + vn[:, 1]) * c)]) / (6 * a)


def _sample_polygon(v: np.ndarray, h: float) -> np.ndarray:
    pts = []
    for i in range(len(v)):
        a, b = v[i], v[(i + 1) % len(v)]
        n = max(1, int(np.ceil(np.linalg.norm(b - a) / h)))
        s = np.arange(n)[:, None] / n
        pts.append(a + s * (b - a))
    return np.vstack(pts)


def make_cross_section(shape, scale: float | None = None, area_tol: float = 1e-12) -> CrossSection:
    """Build a normalized cross-section.

    Parameters
    ----------
    shape : str or array_like
        ``"unit_disc"`` (alias ``"disc"``), ``"scaled_disc"`` together with
        ``scale``, ``"square"`` for the unit square, or an ``(n, 2)`` vertex list.
    scale : float, optional
        Radius for ``scaled_disc``; for other shapes a similarity factor.
    """
    if isinstance(shape, CrossSection):
        return shape if scale is None else shape.scaled(scale)
    if isinstance(shape, str):
        key = shape.lower()
        if key in ("unit_disc", "disc"):
            cs = CrossSection("disc", radius=1.0)
            return cs if scale is None else cs.scaled(scale)
        if key == "scaled_disc":
            if scale is None or scale <= 0:
                raise ValueError("scaled_disc needs a positive scale")
            return CrossSection(f"disc*{scale:g}", radius=float(scale))
        if key == "square":
            shape = [[-0.5, -0.5], [0.5, -0.5], [0.5, 0.5], [-0.5, 0.5]]
        elif key.startswith("polygon"):
            n = int(key[len("polygon"):] or 6)
            t = TWO_PI * np.arange(n) / n
            shape = np.stack([np.cos(t), np.sin(t)], axis=1)
        else:
            raise ValueError(f"unknown cross-section {shape!r}")
    v = np.asarray(shape, dtype=float)
    if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
        raise ValueError("polygon needs at least three 2D vertices")
    signed = 0.5 * np.sum(_cross(v, np.roll(v, -1, axis=0)))
    if abs(signed) < area_tol:
        raise ValueError("degenerate polygon (zero area)")
    if signed < 0:
        v = v[::-1].copy()
    n = len(v)
    for i in range(n):
        for j in range(i + 2, n):
            if i == 0 and j == n - 1:
                continue
            if _segments_intersect(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]):
                raise ValueError("polygon is not simple")
    v = v - _polygon_centroid(v)
    if scale is not None:
        v = v * scale
    return CrossSection("polygon", vertices=v)


def regular_polygon(n: int, circumradius: float = 1.0, rotation: float = 0.0) -> CrossSection:
    t = rotation + TWO_PI * np.arange(n) / n
    cs = make_cross_section(circumradius * np.stack([np.cos(t), np.sin(t)], axis=1))
    return CrossSection(f"polygon{n}", vertices=cs.vertices)


# ---------------------------------------------------------------------------
# meshes


@dataclass(frozen=True)
class Mesh2D:
    """Immutable triangulation with per-vertex boundary tags."""

    vertices: np.ndarray
    triangles: np.ndarray
    tags: np.ndarray
    grading: str = "none"
    inner: CrossSection | None = None
    outer_radius: float | None = None
    periodic: bool = False

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @cached_property
    def signed_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        return 0.5 * _cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])

    @property
    def areas(self) -> np.ndarray:
        return self.signed_areas

    @property
    def total_area(self) -> float:
        return float(np.sum(self.signed_areas))

    @cached_property
    def edges(self) -> np.ndarray:
        e = np.sort(self.triangles[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2), axis=1)
        return np.unique(e, axis=0)

    @cached_property
    def boundary_edges(self) -> np.ndarray:
        e = np.sort(self.triangles[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2), axis=1)
        uniq, counts = np.unique(e, axis=0, return_counts=True)
        return uniq[counts == 1]

    def edge_lengths(self, edges=None) -> np.ndarray:
        e = self.edges if edges is None else edges
        return np.linalg.norm(self.vertices[e[:, 1]] - self.vertices[e[:, 0]], axis=1)

    @cached_property
    def lumped_weights(self) -> np.ndarray:
        """Exact integrals of the hat functions."""
        w = np.zeros(self.n_vertices)
        np.add.at(w, self.triangles.ravel(), np.repeat(self.signed_areas / 3.0, 3))
        return w

    def mask(self, tag: int) -> np.ndarray:
        return self.tags == tag

    @cached_property
    def master_of(self) -> np.ndarray:
        """For periodic meshes, the master index of every slave (-1 elsewhere)."""
        out = -np.ones(self.n_vertices, dtype=int)
        if not self.periodic:
            return out
        v = self.vertices
        slaves = np.flatnonzero(self.tags == PERIODIC_SLAVE)
        masters = np.flatnonzero(self.tags == PERIODIC_MASTER)
        key = {tuple(np.round(v[m], 9)): m for m in masters}
        for s in slaves:
            x, y = v[s]
            x = x - 1.0 if x > 0.5 - 1e-9 else x
            y = y - 1.0 if y > 0.5 - 1e-9 else y
            m = key.get(tuple(np.round([x, y], 9)))
            if m is None:
                raise ValueError(f"periodic vertex {s} at {v[s]} has no master")
            out[s] = m
        return out

    def translated(self, t) -> "Mesh2D":
        return Mesh2D(self.vertices + np.asarray(t, float), self.triangles, self.tags,
                      self.grading, self.inner, self.outer_radius, self.periodic)

    def scaled(self, lam: float) -> "Mesh2D":
        inner = None if self.inner is None else self.inner.scaled(lam)
        outer = None if self.outer_radius is None else self.outer_radius * lam
        return Mesh2D(self.vertices * lam, self.triangles, self.tags, self.grading,
                      inner, outer, self.periodic)

    def check(self) -> None:
        if np.any(self.signed_areas <= 0):
            raise ValueError("mesh has non-positive triangles")
        if self.periodic:
            self.master_of  # noqa: B018  raises when pairing fails


def _ring_angles(ring: np.ndarray) -> np.ndarray:
    return np.mod(np.arctan2(ring[:, 1], ring[:, 0]), TWO_PI)


def _sort_ring(ring: np.ndarray) -> np.ndarray:
    return ring[np.argsort(_ring_angles(ring), kind="stable")]


def _stitch(ia: np.ndarray, aa: np.ndarray, ib: np.ndarray, ab: np.ndarray) -> list:
    """Triangulate the band between two angle-sorted rings (a inside b)."""
    na, nb = len(ia), len(ib)
    shift = int(np.argmin(np.abs(np.angle(np.exp(1j * (ab - aa[0]))))))
    ib, ab = np.roll(ib, -shift), np.roll(ab, -shift)
    ua = aa[0] + np.mod(np.append(aa, aa[0]) - aa[0], TWO_PI)
    ua[-1] = aa[0] + TWO_PI
    b0 = aa[0] + np.angle(np.exp(1j * (ab[0] - aa[0])))
    ub = b0 + np.mod(np.append(ab, ab[0]) - ab[0], TWO_PI)
    ub[-1] = b0 + TWO_PI
    tris = []
    i = j = 0
    while i < na or j < nb:
        if j == nb or (i < na and ua[i + 1] <= ub[j + 1]):
            tris.append((ia[i], ia[(i + 1) % na], ib[j % nb]))
            i += 1
        else:
            tris.append((ia[i % na], ib[(j + 1) % nb], ib[j]))
            j += 1
    return tris


def _assemble_rings(rings: Sequence[np.ndarray], ring_tags: Sequence[int], center: bool) -> tuple:
    pts, tags, index_sets = [], [], []
    offset = 0
    if center:
        pts.append(np.zeros((1, 2)))
        tags.append(np.array([INTERIOR]))
        offset = 1
    for ring, tag in zip(rings, ring_tags):
        ring = _sort_ring(ring)
        pts.append(ring)
        tags.append(np.full(len(ring), tag))
        index_sets.append((np.arange(offset, offset + len(ring)), _ring_angles(ring)))
        offset += len(ring)
    vertices = np.vstack(pts)
    tri = []
    if center:
        idx, _ = index_sets[0]
        tri += [(0, idx[k], idx[(k + 1) % len(idx)]) for k in range(len(idx))]
    for (ia, aa), (ib, ab) in zip(index_sets[:-1], index_sets[1:]):
        tri += _stitch(ia, aa, ib, ab)
    triangles = np.array(tri, dtype=int)
    p = vertices[triangles]
    neg = _cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]) < 0
    triangles[neg] = triangles[neg][:, [0, 2, 1]]
    return vertices, triangles, np.concatenate(tags).astype(np.int8)


def _uniform_ring(radial, n: int) -> np.ndarray:
    t = TWO_PI * np.arange(n) / n
    r = radial(t)
    return r[:, None] * np.stack([np.cos(t), np.sin(t)], axis=1)


def _ring_on_rays(points: np.ndarray, r_of_theta) -> np.ndarray:
    th = _ring_angles(points)
    r = r_of_theta(th)
    return r[:, None] * np.stack([np.cos(th), np.sin(th)], axis=1)


def _circle(radius: float) -> CrossSection:
    return CrossSection(f"circle{radius:g}", radius=float(radius))


def mesh_annulus(S: CrossSection, R: float, h: float, grading: str = "log",
                 through: Sequence[CrossSection] = (), max_ratio: float = 1.3) -> Mesh2D:
    """Triangulate R·D minus S.

    Parameters
    ----------
    S : CrossSection
        The hole; must be star-shaped about the origin.
    R : float
        Outer radius; R·D must contain the closure of S strictly.
    h : float
        Target edge length on the boundary of S.
    grading : {"log", "uniform"}
        ``log`` uses geometric layers whose ratio is capped by ``max_ratio``
        and snapped to 2**(1/n), so meshes for R and 2R share their rings.
    through : sequence of CrossSection
        Intermediate nested curves that must appear as mesh rings (used for
        monotonicity studies on a single mesh).
    """
    if h <= 0:
        raise ValueError("h must be positive")
    if grading not in ("log", "uniform"):
        raise ValueError(f"unknown grading {grading!r}")
    th = np.linspace(0, TWO_PI, 721)
    if np.max(S.radial(th)) >= R * (1 - 1e-9) or (not S.is_disc and np.max(np.linalg.norm(S.vertices, axis=1)) >= R):
        raise ValueError(f"R={R} too small: S is not strictly inside R·D")
    curves = [S] + sorted(through, key=lambda c: float(np.mean(c.radial(th)))) + [_circle(R)]
    for c0, c1 in zip(curves[:-1], curves[1:]):
        if np.any(c1.radial(th) <= c0.radial(th) * (1 + 1e-12)):
            raise ValueError("intermediate curves must be strictly nested")

    ring0 = S.boundary_points(h)
    n0 = len(ring0)
    rmin = float(np.min(np.linalg.norm(ring0, axis=1)))
    rings = [ring0]
    tags = [INNER_S]
    if grading == "log":
        q = min(max_ratio, 1.0 + h / rmin)
        q = 2.0 ** (1.0 / np.ceil(np.log(2.0) / np.log(q)))
    for c0, c1 in zip(curves[:-1], curves[1:]):
        if grading == "log":
            span = np.log(np.max(c1.radial(th) / c0.radial(th)))
            n = max(1, int(np.ceil(span / np.log(q) - 1e-9)))
        else:
            span = np.max(c1.radial(th) - c0.radial(th))
            n = max(1, int(np.ceil(span / h - 1e-9)))
        for j in range(1, n + 1):
            s = j / n
            if grading == "log":
                rf = lambda t, s=s, c0=c0, c1=c1: c0.radial(t) * (c1.radial(t) / c0.radial(t)) ** s
                ring = _ring_on_rays(ring0, rf)
            else:
                rf = lambda t, s=s, c0=c0, c1=c1: c0.radial(t) + s * (c1.radial(t) - c0.radial(t))
                mean_r = float(np.mean(rf(th)))
                m = max(n0, int(np.ceil(TWO_PI * mean_r / h)))
                ring = _uniform_ring(rf, m)
            if j == n and not c1.is_disc:
                ring = np.vstack([ring, c1.vertices])
                ring = _dedupe_angles(ring)
            rings.append(ring)
            if j == n and c1 is curves[-1]:
                tags.append(OUTER_V)
            else:
                tags.append(INTERIOR)
    v, t, g = _assemble_rings(rings, tags, center=False)
    return Mesh2D(v, t, g, grading=grading, inner=S, outer_radius=float(R))


def _dedupe_angles(ring: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    ang = _ring_angles(ring)
    order = np.argsort(ang, kind="stable")
    ring, ang = ring[order], ang[order]
    keep = np.ones(len(ring), bool)
    keep[1:] = np.diff(ang) > tol
    return ring[keep]


def mesh_cell(S: CrossSection, h: float) -> Mesh2D:
    """Triangulate the closed cross-section itself (boundary vertices tagged inner_S)."""
    if h <= 0:
        raise ValueError("h must be positive")
    th = np.linspace(0, TWO_PI, 721)
    rmax = float(np.max(S.radial(th)))
    n = max(2, int(np.ceil(rmax / h)))
    rings = []
    for j in range(1, n + 1):
        t = j / n
        if S.is_disc:
            m = max(6, int(np.ceil(TWO_PI * S.radius * t / h)))
            rings.append(_uniform_ring(lambda a, t=t: S.radius * t * np.ones_like(a), m))
        else:
            rings.append(t * _sample_polygon(S.vertices, h / t))
    tags = [INTERIOR] * (n - 1) + [INNER_S]
    v, tri, g = _assemble_rings(rings, tags, center=True)
    return Mesh2D(v, tri, g, grading="uniform", inner=S)


def _square_radial(theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    return 0.5 / np.maximum(np.abs(np.cos(theta)), np.abs(np.sin(theta)))


def _symmetric_angles(base: np.ndarray) -> np.ndarray:
    a = np.mod(np.concatenate([base, np.pi - base, -base, np.pi + base]), TWO_PI)
    a = np.sort(a)
    keep = np.ones(len(a), bool)
    keep[1:] = np.diff(a) > 1e-9
    a = a[keep]
    if len(a) > 1 and a[-1] > TWO_PI - 1e-9:
        a = a[:-1]
    return a


def mesh_periodic_cell(S: CrossSection, h: float) -> Mesh2D:
    """Triangulate Y minus S for the unit periodic cell Y = [-1/2, 1/2)^2.

    Opposite faces of Y carry matching vertices, so the right/top faces are
    slaves of the left/bottom faces.  The corner (-1/2, -1/2) is the master of
    the other three corners.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    th = np.linspace(0, TWO_PI, 1441)
    if np.any(S.radial(th) >= _square_radial(th) * (1 - 1e-9)):
        raise ValueError("S must lie strictly inside the unit cell")
    n0 = 8 * max(2, int(np.ceil(S.perimeter / (8 * h))))
    base = TWO_PI * np.arange(n0) / n0
    if S.is_disc:
        ang0 = base
    else:
        ang0 = _symmetric_angles(np.concatenate([base, S.corner_angles]))
    gap = float(np.max(_square_radial(th) - S.radial(th)))
    n = max(1, int(np.ceil(gap / h)))
    rings, tags = [], []
    for j in range(n + 1):
        s = j / n
        rf = lambda a, s=s: S.radial(a) + s * (_square_radial(a) - S.radial(a))
        if j == 0:
            ang = ang0
        else:
            mean_r = float(np.mean(rf(th)))
            m = 8 * max(1, int(np.ceil(TWO_PI * mean_r / (8 * h))))
            ang = TWO_PI * np.arange(m) / m
            if j == n:
                ang = _symmetric_angles(np.concatenate([ang, [np.pi / 4]]))
        r = rf(ang)
        ring = r[:, None] * np.stack([np.cos(ang), np.sin(ang)], axis=1)
        rings.append(ring)
        tags.append(INNER_S if j == 0 else INTERIOR)
    v, tri, g = _assemble_rings(rings, tags, center=False)
    v = np.where(np.abs(np.abs(v) - 0.5) < 1e-12, np.sign(v) * 0.5, v)
    g = _periodic_tags(v, g)
    mesh = Mesh2D(v, tri, g, grading="uniform", inner=S, periodic=True)
    mesh.check()
    return mesh


def _periodic_tags(v: np.ndarray, g: np.ndarray) -> np.ndarray:
    g = g.copy()
    on_y = (np.abs(v[:, 0]) > 0.5 - 1e-12) | (np.abs(v[:, 1]) > 0.5 - 1e-12)
    slave = on_y & ((v[:, 0] > 0.5 - 1e-12) | (v[:, 1] > 0.5 - 1e-12))
    g[on_y] = PERIODIC_MASTER
    g[slave] = PERIODIC_SLAVE
    return g


def refine(mesh: Mesh2D) -> Mesh2D:
    """Uniform red refinement (each triangle split in four).

    Midpoints of boundary edges inherit the tag of their endpoints; midpoints
    on a circular boundary are pushed back onto the circle.
    """
    tri = mesh.triangles
    nv = mesh.n_vertices
    local = tri[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 3, 2)
    keys = np.sort(local.reshape(-1, 2), axis=1)
    uniq, inv = np.unique(keys, axis=0, return_inverse=True)
    inv = inv.reshape(-1, 3)
    mids = 0.5 * (mesh.vertices[uniq[:, 0]] + mesh.vertices[uniq[:, 1]])
    counts = np.bincount(inv.ravel(), minlength=len(uniq))
    bnd = counts == 1
    ta, tb = mesh.tags[uniq[:, 0]], mesh.tags[uniq[:, 1]]
    mtags = np.full(len(uniq), INTERIOR, dtype=np.int8)
    same = bnd & (ta == tb) & (ta != INTERIOR)
    mtags[same] = ta[same]
    if mesh.inner is not None and mesh.inner.is_disc:
        sel = mtags == INNER_S
        mids[sel] *= (mesh.inner.radius / np.linalg.norm(mids[sel], axis=1))[:, None]
    if mesh.outer_radius is not None:
        sel = mtags == OUTER_V
        mids[sel] *= (mesh.outer_radius / np.linalg.norm(mids[sel], axis=1))[:, None]
    verts = np.vstack([mesh.vertices, mids])
    tags = np.concatenate([mesh.tags, mtags])
    a, b, c = tri.T
    ab, bc, ca = (inv[:, k] + nv for k in range(3))
    new = np.vstack([
        np.stack([a, ab, ca], 1), np.stack([ab, b, bc], 1),
        np.stack([ca, bc, c], 1), np.stack([ab, bc, ca], 1),
    ])
    if mesh.periodic:
        tags = _periodic_tags(verts, tags)
    return Mesh2D(verts, new, tags, mesh.grading, mesh.inner, mesh.outer_radius, mesh.periodic)


def write_mesh(mesh: Mesh2D, path) -> None:
    """Plain-text export: "V T", then "x y tag" lines, then "i j k" lines."""
    lines = [f"{mesh.n_vertices} {mesh.n_triangles}"]
    lines += [f"{x:.17g} {y:.17g} {TAG_NAMES[t]}" for (x, y), t in zip(mesh.vertices, mesh.tags)]
    lines += [f"{i} {j} {k}" for i, j, k in mesh.triangles]
    Path(path).write_text("\n".join(lines) + "\n")


def read_mesh(path) -> Mesh2D:
    rows = Path(path).read_text().split("\n")
    nv, nt = (int(x) for x in rows[0].split())
    verts = np.empty((nv, 2))
    tags = np.empty(nv, dtype=np.int8)
    for i, line in enumerate(rows[1:1 + nv]):
        x, y, tag = line.split()
        verts[i] = float(x), float(y)
        tags[i] = TAG_NAMES.index(tag)
    tri = np.array([[int(x) for x in line.split()] for line in rows[1 + nv:1 + nv + nt]], dtype=int)
    periodic = bool(np.any(tags == PERIODIC_MASTER))
    return Mesh2D(verts, tri.reshape(-1, 3), tags, periodic=periodic)
