"""Anisotropic capacities of a fiber section and the capacity densities built on them.

``cap(a, alpha; S, V)`` is the least energy of a field that moves S
rigidly, ``a + (2/diam S) alpha ^ y``, and vanishes on the boundary of V.
V is always a disc R·D here; unbounded limits are reached through ladders of
radii.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .energy import EnergyDensity
from .fem import (DiscreteField, Discretization, assemble_energy, capacity_constraints,
                  minimize)
from .geometry import CrossSection, Mesh2D, mesh_annulus

INF = math.inf


class InconsistentLadderError(RuntimeError):
    """A ladder of truncated domains violated the monotone decrease in R."""


@dataclass
class CapacityQuery:
    f: EnergyDensity
    S: CrossSection
    a: np.ndarray
    zeta: float = 0.0
    R: float = 4.0
    h: float = 0.1
    grading: str = "log"


@dataclass
class CapacityResult:
    value: float
    minimizer: DiscreteField | None
    mesh_h: float
    domain_R: float
    diagnostics: object = None


class CapacitySolver:
    """Repeated capacity solves for one density on one mesh.

    The degree-of-freedom numbering (and for quadratic densities the matrix
    factorization) is built once and reused for every (a, zeta).
    """

    def __init__(self, f: EnergyDensity, mesh: Mesh2D, diam: float, center=(0.0, 0.0),
                 rigid_mask=None, zero_mask=None, tol: float = 1e-10, max_iter: int = 60):
        self.f = f
        self.mesh = mesh
        self.tol = tol
        self.max_iter = max_iter
        self.constraints = capacity_constraints(mesh, np.zeros(3), 0.0, diam, center, rigid_mask, zero_mask)
        self.disc = Discretization(mesh, self.constraints)

    def solve(self, a, zeta: float = 0.0):
        a = np.asarray(a, float)
        if not np.any(a) and zeta == 0:
            n = self.mesh.n_vertices
            return DiscreteField(self.mesh, np.zeros((n, 3)), np.zeros(self.disc.n_free)), 0.0, None
        F = assemble_energy(self.f, self.mesh, self.constraints.with_motion(a, zeta), disc=self.disc)
        return minimize(F, tol=self.tol, max_iter=self.max_iter)

    def value(self, a, zeta: float = 0.0) -> float:
        return self.solve(a, zeta)[1]

    def matrix(self) -> np.ndarray:
        """Quadratic form over (a1, a2, a3, zeta) by polarization (quadratic f only)."""
        if not self.f.is_quadratic:
            raise ValueError("polarization needs a quadratic density")
        E = np.eye(4)
        diag = [self.value(E[i, :3], E[i, 3]) for i in range(4)]
        K = np.diag(diag)
        for i in range(4):
            for j in range(i + 1, 4):
                v = self.value(E[i, :3] + E[j, :3], E[i, 3] + E[j, 3])
                K[i, j] = K[j, i] = 0.5 * (v - diag[i] - diag[j])
        return K


def capacity(q: CapacityQuery) -> CapacityResult:
    """Discrete capacity of S inside q.R·D (an upper bound converging under refinement)."""
    mesh = mesh_annulus(q.S, q.R, q.h, q.grading)
    fld, val, diag = CapacitySolver(q.f, mesh, q.S.diameter).solve(q.a, q.zeta)
    return CapacityResult(val, fld, q.h, q.R, diag)


def radial_p_capacity(p: float, R1: float, R2: float) -> float:
    """Closed-form capacity of the radial scalar p-problem on the annulus R1 < |y| < R2, per unit angle."""
    if p == 2:
        return 1.0 / math.log(R2 / R1)
    s = (p - 2) / (p - 1)
    return (s / (R2**s - R1**s)) ** (p - 1)


def isotropic_annulus_capacities(lam: float, mu: float, r: float, R: float, diam: float | None = None) -> dict:
    """Exact capacities of f = (lam/2) tr^2 + mu |M|^2 for the disc r·D inside R·D.

    Returns the coefficients of a1^2 (= a2^2), a3^2 and zeta^2; the form is
    diagonal.  ``diam`` is the diameter in the rotation factor 2/diam
    (default 2r, the inner disc itself).
    """
    if not (0 < r < R):
        raise ValueError("need 0 < r < R")
    diam = 2.0 * r if diam is None else diam
    nu = lam / (2.0 * (lam + mu))
    L = math.log(R / r)
    kappa = 3.0 - 4.0 * nu
    inplane = 4.0 * math.pi * mu * (1.0 - nu) / (kappa * L - (R**2 - r**2) / (kappa * (R**2 + r**2)))
    antiplane = math.pi * mu / L
    # rotation speed 2 zeta / diam; the field (2 zeta/diam) (R^2/r^2 - 1)^-1 (R^2/|y|^2 - 1) e3 ^ y
    w = 2.0 / diam
    torsion = 2.0 * math.pi * mu * w**2 * r**2 * R**2 / (R**2 - r**2)
    return {"inplane": inplane, "antiplane": antiplane, "torsion": torsion}


# ---------------------------------------------------------------------------
# p = 2: logarithmic scaling


@dataclass
class ScaledCapacity:
    r: float
    R: float
    h: float
    raw: np.ndarray
    value: np.ndarray
    admissible: bool
    matrix: np.ndarray | None = None


def default_outer_radius(r: float) -> float:
    return 1.0 / math.log(1.0 / r)


def is_admissible_p2(r: float, R: float, margin: float = 10.0) -> bool:
    """Heuristic check of r << R << 1/sqrt|log r| with a fixed margin."""
    return R >= margin * r and R * math.sqrt(abs(math.log(r))) <= 1.0


def scaled_capacity_p2(f: EnergyDensity, S: CrossSection, r: float, R: float, a=None,
                       h: float = 0.05, full_matrix: bool = False) -> ScaledCapacity:
    """|log r| cap(a, 0; rS, R·D) computed on S inside (R/r)·D.

    For a 2-homogeneous density the capacity is invariant under similarity,
    so the reference annulus is meshed instead of the tiny one.  When ``a``
    is omitted the three basis directions are returned.
    """
    if f.p != 2:
        raise ValueError("scaled_capacity_p2 needs p = 2")
    mesh = mesh_annulus(S, R / r, h, "log")
    solver = CapacitySolver(f, mesh, S.diameter)
    dirs = np.eye(3) if a is None else np.atleast_2d(np.asarray(a, float))
    raw = np.array([solver.value(d, 0.0) for d in dirs])
    K = solver.matrix()[:3, :3] * abs(math.log(r)) if full_matrix else None
    return ScaledCapacity(r, R, h, raw, abs(math.log(r)) * raw, is_admissible_p2(r, R), K)


@dataclass
class P2Ladder:
    ks: list
    points: list
    extrapolated: np.ndarray
    cauchy_gaps: np.ndarray


def p2_ladder(f: EnergyDensity, S: CrossSection, ks=range(6, 15), h: float = 0.05) -> P2Ladder:
    """Scaled capacities along r = 2^-k, R = 1/log(1/r), per basis direction.

    ``extrapolated`` fits 1/c = u (1 - log L / L) - v / L (L = |log r|), the
    exact form of the leading logarithmic asymptotics, and reports 1/u.
    """
    ks = list(ks)
    pts = []
    for k in ks:
        r = 2.0 ** (-k)
        pts.append(scaled_capacity_p2(f, S, r, default_outer_radius(r), h=h))
    L = np.array([abs(math.log(p.r)) for p in pts])
    vals = np.array([p.value for p in pts])
    A = np.stack([1 - np.log(L) / L, -1.0 / L], axis=1)
    coef, *_ = np.linalg.lstsq(A, 1.0 / vals, rcond=None)
    extrap = 1.0 / coef[0]
    gaps = np.abs(np.diff(vals, axis=0)) / vals[1:]
    return P2Ladder(ks, pts, extrap, gaps)


# ---------------------------------------------------------------------------
# p < 2: the plane capacity is reached monotonically


@dataclass
class PlaneLimit:
    radii: np.ndarray
    values: np.ndarray
    extrapolated: float
    error_estimate: float
    rate: float


def _ladder_values(f, S, a, zeta, R_ladder, h):
    out = []
    for R in sorted(R_ladder):
        mesh = mesh_annulus(S, R, h, "log")
        out.append(CapacitySolver(f, mesh, S.diameter).value(a, zeta))
    return np.array(out)


def capacity_plane_limit(f: EnergyDensity, S: CrossSection, a, zeta: float,
                         R_ladder=(4, 8, 16, 32), h: float = 0.1, slack: float = 1e-8,
                         use_recession: bool = True) -> PlaneLimit:
    """cap of the recession density over the whole plane, for 1 < p < 2.

    Values on the ladder must decrease with R.  Richardson extrapolation uses
    the algebraic rate R^((p-2)/(p-1)) of the radial problem (1/R at p = 1.5);
    the error estimate is the larger of the last decrement and the
    extrapolation correction.
    """
    if not f.p < 2:
        raise ValueError("plane limit needs p < 2")
    g = f.recession() if use_recession else f
    radii = np.array(sorted(R_ladder), float)
    vals = _ladder_values(g, S, a, zeta, radii, h)
    scale = max(abs(vals[0]), 1e-300)
    if np.any(np.diff(vals) > slack * scale):
        raise InconsistentLadderError(f"capacity increased along the R ladder: {vals}")
    s = (f.p - 2) / (f.p - 1)
    if len(vals) < 2 or vals[-1] == 0:
        return PlaneLimit(radii, vals, float(vals[-1]), 0.0, s)
    rho = (radii[-1] / radii[-2]) ** s
    extrap = (vals[-1] - rho * vals[-2]) / (1 - rho)
    err = max(abs(vals[-2] - vals[-1]), abs(vals[-1] - extrap))
    return PlaneLimit(radii, vals, float(extrap), float(err), s)


# ---------------------------------------------------------------------------
# p > 2: translations cost nothing over the plane


@dataclass
class DecayReport:
    radii: np.ndarray
    values: np.ndarray
    slope: float
    radial_values: np.ndarray
    radial_slope: float
    torsion_values: np.ndarray | None = None
    monotone: bool = True


def capacity_decay_p_gt2(f: EnergyDensity, a=(1.0, 0.0, 0.0), R_ladder=(2, 4, 8, 16, 32),
                         h: float = 0.1, S: CrossSection | None = None,
                         with_torsion: bool = False) -> DecayReport:
    """Decay of cap(a, 0; D, R·D) as R grows when p > 2.

    The log-log slope against (R^s - 1)^(p-1), s = (p-2)/(p-1), is -1 for
    the radial scalar problem; the vector problem is compared against it.
    """
    from .geometry import make_cross_section

    if not f.p > 2:
        raise ValueError("decay study needs p > 2")
    S = make_cross_section("disc") if S is None else S
    radii = np.array(sorted(R_ladder), float)
    vals, tors = [], []
    for R in radii:
        solver = CapacitySolver(f, mesh_annulus(S, R, h, "log"), S.diameter)
        vals.append(solver.value(a, 0.0))
        if with_torsion:
            tors.append(solver.value(np.zeros(3), 1.0))
    vals = np.array(vals)
    s = (f.p - 2) / (f.p - 1)
    x = np.log((radii**s - 1) ** (f.p - 1))
    slope = float(np.polyfit(x, np.log(vals), 1)[0])
    rad = np.array([radial_p_capacity(f.p, 1.0, R) for R in radii])
    rslope = float(np.polyfit(x, np.log(rad), 1)[0])
    return DecayReport(radii, vals, slope, rad, rslope, np.array(tors) if with_torsion else None,
                       bool(np.all(np.diff(vals) < 0)))


# ---------------------------------------------------------------------------
# the capacity density entering the effective energy


@dataclass
class CapacityDensity:
    """c^f as a function of (a, zeta).

    branch ``plane`` (1 < p < 2): gamma times the plane capacity of the
    recession density, evaluated lazily with caching.
    branch ``quadratic`` (p = 2): gamma a.K.a for zeta = 0 and +inf otherwise
    (directions evaluated lazily when f is 2-homogeneous but not quadratic).
    branch ``indicator`` (p > 2 or gamma infinite): 0 at the origin, +inf elsewhere.
    branch ``zero`` (gamma = 0): identically 0.
    """

    branch: str
    p: float
    gamma: float
    matrix: np.ndarray | None = None
    f: EnergyDensity | None = None
    S: CrossSection | None = None
    h: float = 0.1
    R_ladder: tuple = (4, 8, 16, 32)
    k: int = 14
    _cache: dict = field(default_factory=dict, repr=False)

    def __call__(self, a, zeta: float = 0.0) -> float:
        a = np.asarray(a, float)
        at_origin = not np.any(a) and zeta == 0
        if at_origin or self.branch == "zero":
            return 0.0
        if self.branch == "indicator":
            return INF
        if self.branch == "quadratic":
            if zeta != 0:
                return INF
            if self.matrix is not None:
                return float(self.gamma * a @ self.matrix @ a)
            # 2-homogeneous but not quadratic: tabulate directions, magnitude is exact
            t = float(np.linalg.norm(a))
            key = tuple(np.round(a / t, 12))
            if key not in self._cache:
                r = 2.0 ** (-self.k)
                sc = scaled_capacity_p2(self.f, self.S, r, default_outer_radius(r), a=a / t, h=self.h)
                self._cache[key] = float(sc.value[0])
            return self.gamma * t**2 * self._cache[key]
        key = tuple(np.round(np.append(a, zeta), 12))
        if key not in self._cache:
            lim = capacity_plane_limit(self.f, self.S, a, zeta, self.R_ladder, self.h)
            self._cache[key] = self.gamma * lim.extrapolated
        return self._cache[key]

    def is_finite(self, a, zeta: float = 0.0) -> bool:
        return math.isfinite(self(a, zeta))

    def fit_homogeneous(self, n_dirs: int = 24, seed: int = 0) -> np.ndarray:
        """Fit K with c(x) ~ (x.K.x)^{p/2}, x = (a1, a2, a3, zeta), from sampled directions (p < 2)."""
        if self.branch != "plane":
            raise ValueError("homogeneous fit is for the p < 2 branch")
        rng = np.random.default_rng(seed)
        X = np.vstack([np.eye(4), rng.normal(size=(n_dirs, 4))])
        X /= np.linalg.norm(X, axis=1, keepdims=True)
        y = np.array([self(x[:3], x[3]) for x in X]) ** (2.0 / self.p)
        iu = np.triu_indices(4)
        A = np.stack([X[:, i] * X[:, j] * (1 if i == j else 2) for i, j in zip(*iu)], axis=1)
        coef, *_ = np.linalg.lstsq(A, y, rcond=None)
        K = np.zeros((4, 4))
        K[iu] = coef
        return K + np.triu(K, 1).T


def capacity_density(f: EnergyDensity, S: CrossSection, regime, h: float = 0.05,
                     ks=(14,), R_ladder=(4, 8, 16, 32)) -> CapacityDensity:
    """Dispatch on the exponent: plane limit, log-scaled quadratic form, or indicator.

    ``regime`` is anything with a ``gamma_p`` attribute (a RegimeReport) or a number.
    """
    gamma = float(getattr(regime, "gamma_p", regime))
    p = f.p
    if gamma == 0:
        return CapacityDensity("zero", p, gamma)
    if p > 2 or math.isinf(gamma):
        return CapacityDensity("indicator", p, gamma)
    if p == 2:
        k = int(max(ks))
        if not f.is_quadratic:
            return CapacityDensity("quadratic", p, gamma, f=f, S=S, h=h, k=k)
        r = 2.0 ** (-k)
        sc = scaled_capacity_p2(f, S, r, default_outer_radius(r), h=h, full_matrix=True)
        return CapacityDensity("quadratic", p, gamma, matrix=sc.matrix, f=f, S=S, h=h, k=k)
    return CapacityDensity("plane", p, gamma, f=f, S=S, h=h, R_ladder=tuple(R_ladder))
