"""Piecewise-linear discretization of integral functionals of e_y(psi).

A field psi is R^3-valued and piecewise linear on a Mesh2D.  On each
triangle the planar strain is constant, so the strain at a quadrature point
is ``B_t u_t + load(point)`` where ``load`` is an optional affine strain
field (cell problems).  Constraints are imposed by eliminating degrees of
freedom: fixed vertices carry prescribed values and periodic slaves share the
unknowns of their masters.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .energy import DELTA, W, EnergyDensity, p_norm
from .geometry import INNER_S, OUTER_V, Mesh2D

log = logging.getLogger(__name__)

DIRECT_SOLVE_LIMIT = 200_000


class ConvergenceError(RuntimeError):
    """Newton iteration did not converge; carries the last iterate and history."""

    def __init__(self, message, x=None, history=None):
        super().__init__(message)
        self.x = x
        self.history = history or []


class SingularProblemError(ValueError):
    """The constraints leave rigid motions free."""


# ---------------------------------------------------------------------------
# constraints


def rigid_motion(points, a, alpha, diam: float, center=(0.0, 0.0)) -> np.ndarray:
    """Values of a + (2/diam) alpha ^ (y - center) at planar points."""
    y = np.atleast_2d(points) - np.asarray(center, float)
    a = np.asarray(a, float)
    al = np.asarray(alpha, float)
    if al.ndim == 0:
        al = np.array([0.0, 0.0, float(al)])
    k = 2.0 / diam
    out = np.empty((len(y), 3))
    out[:, 0] = a[0] - k * al[2] * y[:, 1]
    out[:, 1] = a[1] + k * al[2] * y[:, 0]
    out[:, 2] = a[2] + k * (al[0] * y[:, 1] - al[1] * y[:, 0])
    return out


@dataclass(frozen=True)
class ConstraintSet:
    """Which vertices are prescribed and with which values.

    Attributes
    ----------
    zero : bool mask of vertices held at zero (outer boundary).
    rigid : bool mask of vertices moving rigidly.
    a, alpha : translation and rotation of the rigid motion (alpha is a
        3-vector; capacity problems use alpha = zeta e3).
    diam : diameter entering the 2/diam factor.
    center : point about which the rotation acts.
    periodic : identify slave vertices with their masters.
    gauge : pin the rigid-motion null space (pure Neumann problems) and
        return the representative with zero component means and zero mean
        in-plane rotation.
    mean_value : optional prescribed integral of the field over the mesh
        domain (affine constraint handled with multipliers).
    """

    zero: np.ndarray
    rigid: np.ndarray
    a: np.ndarray = field(default_factory=lambda: np.zeros(3))
    alpha: np.ndarray = field(default_factory=lambda: np.zeros(3))
    diam: float = 2.0
    center: np.ndarray = field(default_factory=lambda: np.zeros(2))
    periodic: bool = False
    gauge: bool = False
    mean_value: np.ndarray | None = None

    def with_motion(self, a, alpha) -> "ConstraintSet":
        al = np.asarray(alpha, float)
        if al.ndim == 0:
            al = np.array([0.0, 0.0, float(al)])
        return ConstraintSet(self.zero, self.rigid, np.asarray(a, float), al, self.diam,
                             self.center, self.periodic, self.gauge, self.mean_value)


def capacity_constraints(mesh: Mesh2D, a, zeta: float, diam: float, center=(0.0, 0.0),
                         rigid_mask=None, zero_mask=None) -> ConstraintSet:
    """Zero on outer_V vertices, rigid motion on inner_S vertices (or masks)."""
    rigid = mesh.mask(INNER_S) if rigid_mask is None else np.asarray(rigid_mask, bool)
    zero = mesh.mask(OUTER_V) if zero_mask is None else np.asarray(zero_mask, bool)
    if np.any(rigid & zero):
        raise ValueError("a vertex cannot be both rigid and held at zero")
    return ConstraintSet(zero, rigid, diam=diam, center=np.asarray(center, float)).with_motion(a, zeta)


def neumann_constraints(mesh: Mesh2D) -> ConstraintSet:
    n = mesh.n_vertices
    return ConstraintSet(np.zeros(n, bool), np.zeros(n, bool), gauge=True)


# ---------------------------------------------------------------------------
# discretization


def p1_gradients(mesh: Mesh2D) -> np.ndarray:
    """Constant gradients of the three hat functions on every triangle, shape (m, 3, 2)."""
    p = mesh.vertices[mesh.triangles]
    x, y = p[..., 0], p[..., 1]
    b = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1)
    c = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1)
    two_a = (2.0 * mesh.signed_areas)[:, None]
    return np.stack([b / two_a, c / two_a], axis=-1)


def strain_operator(mesh: Mesh2D) -> np.ndarray:
    """Per-triangle map from the 9 local values to the 6 strain components, shape (m, 6, 9).

    Local ordering is vertex-major: (v0.x, v0.y, v0.z, v1.x, ...).
    """
    G = p1_gradients(mesh)
    m = len(G)
    B = np.zeros((m, 6, 9))
    for k in range(3):
        gx, gy = G[:, k, 0], G[:, k, 1]
        B[:, 0, 3 * k] = gx
        B[:, 1, 3 * k + 1] = gy
        B[:, 3, 3 * k] = 0.5 * gy
        B[:, 3, 3 * k + 1] = 0.5 * gx
        B[:, 4, 3 * k + 2] = 0.5 * gx
        B[:, 5, 3 * k + 2] = 0.5 * gy
    return B


def quadrature(mesh: Mesh2D, rule: str) -> tuple[np.ndarray, np.ndarray]:
    """Points (m, nq, 2) and weights (m, nq); ``centroid`` or ``edge`` (midpoints, exact for quadratics)."""
    p = mesh.vertices[mesh.triangles]
    A = mesh.signed_areas
    if rule == "centroid":
        return p.mean(axis=1)[:, None, :], A[:, None]
    if rule == "edge":
        pts = 0.5 * (p + np.roll(p, -1, axis=1))
        return pts, np.repeat(A[:, None] / 3.0, 3, axis=1)
    raise ValueError(f"unknown quadrature rule {rule!r}")


class Discretization:
    """Degree-of-freedom bookkeeping for one mesh and one pattern of constraints.

    The numbering does not depend on the prescribed values, so problems that
    differ only in their data share it (and share factorizations for
    quadratic densities).
    """

    def __init__(self, mesh: Mesh2D, constraints: ConstraintSet, rule: str = "centroid"):
        self.mesh = mesh
        self.rule = rule
        n = mesh.n_vertices
        fixed = np.asarray(constraints.zero, bool) | np.asarray(constraints.rigid, bool)
        owner = np.arange(n)
        if constraints.periodic:
            slaves = mesh.master_of >= 0
            owner[slaves] = mesh.master_of[slaves]
            fixed = fixed | fixed[owner]
        fixed_dof = np.repeat(fixed, 3).reshape(n, 3)
        self.pins = np.zeros((n, 3), bool)
        if constraints.gauge:
            if np.any(fixed):
                raise ValueError("gauge is only meaningful without prescribed vertices")
            self.pins = self._choose_pins(mesh)
            fixed_dof = fixed_dof | self.pins
        elif not np.any(fixed):
            raise SingularProblemError(
                "no prescribed vertices: the energy is invariant under planar rigid motions; "
                "use a gauge (neumann_constraints) or boundary data")
        self.fixed = fixed_dof
        own_free = ~fixed_dof[owner]
        index = -np.ones((n, 3), dtype=int)
        masters = owner == np.arange(n)
        sel = masters[:, None] & own_free
        index[sel] = np.arange(int(sel.sum()))
        index = index[owner]
        self.dof_index = index
        self.n_free = int(sel.sum())
        self.owner = owner
        self.B = strain_operator(mesh)
        self.BT = np.ascontiguousarray(np.swapaxes(self.B, 1, 2))
        self.points, self.weights = quadrature(mesh, rule)
        self.elem_dofs = (3 * mesh.triangles[:, :, None] + np.arange(3)).reshape(-1, 9)
        self.elem_free = index.ravel()[self.elem_dofs]
        self.gauge = constraints.gauge
        self._factor_cache: dict = {}
        rows = np.repeat(self.elem_free, 9, axis=1).ravel()
        cols = np.tile(self.elem_free, (1, 9)).ravel()
        keep = (rows >= 0) & (cols >= 0)
        self._hrows, self._hcols, self._hkeep = rows[keep], cols[keep], keep

    @staticmethod
    def _choose_pins(mesh: Mesh2D) -> np.ndarray:
        v = mesh.vertices
        i0 = int(np.argmin(np.linalg.norm(v - v.mean(axis=0), axis=1)))
        d = v - v[i0]
        i1 = int(np.argmax(np.linalg.norm(d, axis=1)))
        pins = np.zeros((mesh.n_vertices, 3), bool)
        pins[i0] = True
        # a rotation about i0 moves i1 perpendicular to d[i1]
        pins[i1, 1 - int(np.argmax(np.abs(d[i1])))] = True
        return pins

    # scatter helpers
    def expand(self, x: np.ndarray, fixed_values: np.ndarray) -> np.ndarray:
        """Full (n, 3) vertex values from free unknowns and prescribed data."""
        u = np.array(fixed_values, dtype=float, copy=True)
        idx = self.dof_index
        free = idx >= 0
        u[free] = x[idx[free]]
        return u

    def reduce(self, full_grad: np.ndarray) -> np.ndarray:
        """Sum a gradient with respect to all vertex values onto the free unknowns."""
        idx = self.dof_index.ravel()
        keep = idx >= 0
        return np.bincount(idx[keep], weights=full_grad.ravel()[keep], minlength=self.n_free)

    def null_space(self) -> np.ndarray:
        """Rigid motions annihilated by e_y: three translations and the in-plane rotation, shape (4, n, 3)."""
        v = self.mesh.vertices
        n = len(v)
        Z = np.zeros((4, n, 3))
        for c in range(3):
            Z[c, :, c] = 1.0
        Z[3, :, 0] = -v[:, 1]
        Z[3, :, 1] = v[:, 0]
        return Z


@dataclass
class DiscreteField:
    """A piecewise-linear R^3 field together with its free unknowns."""

    mesh: Mesh2D
    values: np.ndarray
    free: np.ndarray


@dataclass
class Diagnostics:
    iterations: int = 0
    history: list = field(default_factory=list)
    converged: bool = True
    gradient_norm: float = 0.0
    method: str = "linear"


class EnergyFunctional:
    """x -> sum over quadrature points of w f(B u + load), with its derivatives.

    Parameters
    ----------
    f : EnergyDensity
    disc : Discretization
    fixed_values : (n, 3) array of prescribed values (ignored at free dofs)
    load : callable, optional
        Affine strain field: maps quadrature points (..., 2) to Voigt strains (..., 6).
    mean_constraint : (3,) array, optional
        Prescribed integral of the field over the mesh.
    """

    def __init__(self, f: EnergyDensity, disc: Discretization, fixed_values=None,
                 load: Callable | None = None, mean_constraint=None):
        self.f = f
        self.disc = disc
        n = disc.mesh.n_vertices
        self.fixed_values = np.zeros((n, 3)) if fixed_values is None else np.asarray(fixed_values, float)
        self.load = None if load is None else load(disc.points)
        self.mean_constraint = None if mean_constraint is None else np.asarray(mean_constraint, float)
        self.delta = DELTA
        self._C = None

    @property
    def n_free(self) -> int:
        return self.disc.n_free

    def strains(self, x) -> np.ndarray:
        u = self.disc.expand(x, self.fixed_values).ravel()[self.disc.elem_dofs]
        m = np.matmul(self.disc.B, u[:, :, None])[:, None, :, 0]
        if self.load is not None:
            m = m + self.load
        return m

    def value(self, x, regularized: bool = False) -> float:
        return float(np.sum(self.disc.weights * self.f.value(self.strains(x), regularized, self.delta)))

    def gradient(self, x) -> np.ndarray:
        d = self.disc
        g = self.f.grad(self.strains(x), self.delta) * d.weights[..., None]
        local = np.matmul(d.BT, g.sum(axis=1)[:, :, None])[:, :, 0]
        full = np.bincount(d.elem_dofs.ravel(), weights=local.ravel(), minlength=3 * d.mesh.n_vertices)
        return d.reduce(full)

    def hessian(self, x) -> sp.csr_matrix:
        d = self.disc
        if self.f.is_quadratic:
            K = np.matmul(np.matmul(d.BT, self.f.tensor_hessian), d.B) * d.weights.sum(axis=1)[:, None, None]
        else:
            H6 = np.sum(d.weights[:, :, None, None] * self.f.hess(self.strains(x), self.delta), axis=1)
            K = np.matmul(np.matmul(d.BT, H6), d.B)
        vals = K.ravel()[d._hkeep]
        H = sp.coo_matrix((vals, (d._hrows, d._hcols)), shape=(d.n_free, d.n_free)).tocsr()
        return H

    def mean_operator(self) -> tuple[sp.csr_matrix, np.ndarray]:
        """Rows C and offset c0 with integral of the field = C x + c0."""
        if self._C is None:
            d = self.disc
            w = d.mesh.lumped_weights
            idx = d.dof_index
            rows, cols, vals = [], [], []
            for c in range(3):
                free = idx[:, c] >= 0
                rows.append(np.full(int(free.sum()), c))
                cols.append(idx[free, c])
                vals.append(w[free])
            C = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                              shape=(3, d.n_free)).tocsr()
            fixed_part = self.fixed_values * (idx < 0)
            self._C = (C, w @ fixed_part)
        return self._C

    def field(self, x) -> DiscreteField:
        u = self.disc.expand(x, self.fixed_values)
        if self.disc.gauge:
            u = gauge_fix(self.disc, u)
        return DiscreteField(self.disc.mesh, u, np.asarray(x))


def gauge_fix(disc: Discretization, u: np.ndarray) -> np.ndarray:
    """Add the rigid motion that makes component means and the mean rotation vanish."""
    Z = disc.null_space()
    w = disc.mesh.lumped_weights
    N = np.einsum("n,knc,jnc->kj", w, Z, Z)
    rhs = -np.einsum("n,knc,nc->k", w, Z, u)
    s = np.linalg.solve(N, rhs)
    return u + np.einsum("k,knc->nc", s, Z)


# ---------------------------------------------------------------------------
# linear algebra


def factorize(H: sp.spmatrix) -> Callable:
    """Return a solver for H x = b: sparse direct below the size limit, Jacobi-CG above."""
    n = H.shape[0]
    if n == 0:
        return lambda b: np.zeros_like(b)
    if n < DIRECT_SOLVE_LIMIT:
        lu = spla.splu(sp.csc_matrix(H), permc_spec="MMD_AT_PLUS_A",
                       diag_pivot_thresh=0.0, options={"SymmetricMode": True})
        return lu.solve
    dinv = 1.0 / H.diagonal()
    M = spla.LinearOperator(H.shape, matvec=lambda v: dinv * v)

    def solve(b):
        cols = b.reshape(n, -1)
        out = np.empty_like(cols)
        for k in range(cols.shape[1]):
            out[:, k], info = spla.cg(H, cols[:, k], M=M, rtol=1e-12, maxiter=20 * n)
            if info != 0:
                raise ConvergenceError(f"conjugate gradient failed (info={info})")
        return out.reshape(b.shape)

    return solve


def _newton_direction(solve, g, C=None, r=None):
    """Solve H d = -g, optionally subject to C d = r, through the Schur complement."""
    d0 = -solve(g)
    if C is None:
        return d0
    Ct = C.T.toarray()
    X = solve(Ct)
    S = C @ X
    lam = np.linalg.solve(S, C @ d0 - r)
    return d0 - X @ lam


def minimize(F: EnergyFunctional, tol: float = 1e-10, max_iter: int = 60, x0=None,
             gtol: float | None = None):
    """Minimize F over its free unknowns.

    Quadratic densities take one linear solve (the factorization is cached on
    the discretization).  Other densities run damped Newton on the regularized
    energy, starting from the minimizer of the quadratic problem with the same
    constraints.

    Returns
    -------
    field : DiscreteField
    value : float
        Unregularized energy at the minimizer.
    diagnostics : Diagnostics
    """
    d = F.disc
    gtol = tol if gtol is None else gtol
    C = r_of = None
    if F.mean_constraint is not None:
        C, c0 = F.mean_operator()
        r_of = lambda x: F.mean_constraint - c0 - C @ x  # noqa: E731
    if F.f.is_quadratic:
        key = id(F.f)
        hit = d._factor_cache.get(key)
        if hit is None or hit[0] is not F.f:
            hit = (F.f, factorize(F.hessian(np.zeros(d.n_free))))
            d._factor_cache[key] = hit
        solve = hit[1]
        x = np.zeros(d.n_free)
        g = F.gradient(x)
        x = _newton_direction(solve, g, C, None if C is None else r_of(x))
        gn = float(np.linalg.norm(F.gradient(x) if C is None else 0.0))
        val = F.value(x)
        diag = Diagnostics(1, [(1, val, gn)], True, gn, "linear")
        return F.field(x), val, diag

    if x0 is None:
        c_lo, c_hi = F.f.growth_constants()
        Fq = EnergyFunctional(p_norm(c_hi, 2.0), d, F.fixed_values, None, F.mean_constraint)
        Fq.load = F.load
        fld, _, _ = minimize(Fq)
        x = fld.free.copy()
    else:
        x = np.asarray(x0, float).copy()
    if F.f.p >= 2:
        return _newton(F, x, tol, gtol, max_iter, C, r_of)
    # p < 2: the Hessian blows up where the strain vanishes, so walk the
    # regularization down from the strain scale, warm-starting each stage
    m = F.strains(x)
    scale = float(np.sqrt(np.sum(F.disc.weights * np.sum(W * m * m, axis=-1)) / F.disc.weights.sum()))
    deltas = []
    dlt = 0.1 * scale
    while dlt > 100 * DELTA:
        deltas.append(dlt)
        dlt *= 0.1
    staged = 0
    try:
        for dlt in deltas:
            F.delta = dlt
            fld, _, diag = _newton(F, x, 1e-8, np.inf, max_iter, C, r_of)
            x = fld.free.copy()
            staged += diag.iterations
        F.delta = DELTA
        fld, val, diag = _newton(F, x, tol, gtol, max_iter, C, r_of)
        diag.iterations += staged
        return fld, val, diag
    finally:
        F.delta = DELTA


def _newton(F, x, tol, gtol, max_iter, C, r_of):
    E = F.value(x, regularized=True)
    F0 = abs(F.value(np.zeros_like(x)))
    history = [(0, E, float(np.linalg.norm(F.gradient(x))))]
    if C is not None:
        # restore feasibility exactly before iterating
        solve = factorize(F.hessian(x))
        x = x + _newton_direction(solve, np.zeros_like(x), C, r_of(x))
        E = F.value(x, regularized=True)
    for it in range(1, max_iter + 1):
        g = F.gradient(x)
        solve = factorize(F.hessian(x))
        step = _newton_direction(solve, g, C, None if C is None else np.zeros(C.shape[0]))
        slope = float(g @ step)
        gn = _projected_norm(g, C)
        # a decrement at round-off level is final even when the gradient norm,
        # which is not scale invariant, sits above gtol
        if -slope <= 2 * tol * max(1.0, abs(E)) and (gn <= gtol * (1.0 + F0)
                                                    or -slope <= 1e-13 * max(1.0, abs(E))):
            return F.field(x), F.value(x), Diagnostics(it - 1, history, True, gn, "newton")
        t = 1.0
        while True:
            E_new = F.value(x + t * step, regularized=True)
            if E_new <= E + 1e-4 * t * slope:
                break
            t *= 0.5
            if t < 1e-12:
                break
        if E_new > E:
            # no descent possible at machine precision: accept only if already stationary
            if -slope <= 1e-12 * max(1.0, abs(E)):
                return F.field(x), F.value(x), Diagnostics(it - 1, history, True, gn, "newton")
            raise ConvergenceError("line search failed", x, history)
        x = x + t * step
        rel = (E - E_new) / max(abs(E_new), 1e-300)
        E = E_new
        gn_new = _projected_norm(F.gradient(x), C)
        history.append((it, E, gn_new))
        log.debug("newton %d: E=%.16g |g|=%.3e t=%.3g", it, E, gn_new, t)
        if rel < tol and gn_new <= gtol * (1.0 + F0):
            return F.field(x), F.value(x), Diagnostics(it, history, True, gn_new, "newton")
    raise ConvergenceError(f"Newton did not converge in {max_iter} iterations", x, history)


def _projected_norm(g, C):
    if C is None:
        return float(np.linalg.norm(g))
    Ct = C.T.toarray()
    coef, *_ = np.linalg.lstsq(Ct, g, rcond=None)
    return float(np.linalg.norm(g - Ct @ coef))


def assemble_energy(f: EnergyDensity, mesh: Mesh2D, constraints: ConstraintSet,
                    load: Callable | None = None, rule: str = "centroid",
                    disc: Discretization | None = None) -> EnergyFunctional:
    """Energy functional for f on the mesh under the given constraints."""
    if disc is None:
        disc = Discretization(mesh, constraints, rule)
    values = np.zeros((mesh.n_vertices, 3))
    if np.any(constraints.rigid):
        values[constraints.rigid] = rigid_motion(mesh.vertices[constraints.rigid], constraints.a,
                                                 constraints.alpha, constraints.diam, constraints.center)
    if constraints.periodic:
        slaves = mesh.master_of >= 0
        values[slaves] = values[mesh.master_of[slaves]]
    return EnergyFunctional(f, disc, values, load, constraints.mean_value)
