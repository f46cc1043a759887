"""Convex strain-rate densities with p-growth.

Internally a symmetric 3x3 matrix is stored as the 6-vector of its tensor
components ``m = (M11, M22, M33, M12, M13, M23)``.  The Frobenius norm is
``|M|^2 = sum(W * m**2)`` with ``W = (1, 1, 1, 2, 2, 2)``.

Tables of the ``quadratic_form`` kind act on *engineering* strains
``gamma = (M11, M22, M33, 2 M12, 2 M13, 2 M23)`` through ``f = gamma.Q.gamma / 2``,
which is the usual stiffness-matrix convention: an isotropic table with
``Q[i, i] = lam + 2 mu`` (normal), ``Q[i, j] = lam`` (normal pairs) and
``Q[k, k] = mu`` (shear) reproduces ``lam/2 (tr M)^2 + mu M:M``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

VOIGT_PAIRS = ((0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2))
W = np.array([1.0, 1.0, 1.0, 2.0, 2.0, 2.0])
ENG = W  # tensor -> engineering factor happens to coincide with the norm weights
DELTA = 1e-8


class UnsupportedDensityError(ValueError):
    """Raised when a closed-form recession or tangent density does not exist."""


def sym_to_voigt(M) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    return np.stack([M[..., i, j] for i, j in VOIGT_PAIRS], axis=-1)


def voigt_to_sym(m) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    out = np.zeros(m.shape[:-1] + (3, 3))
    for k, (i, j) in enumerate(VOIGT_PAIRS):
        out[..., i, j] = m[..., k]
        out[..., j, i] = m[..., k]
    return out


def frobenius_sq(m) -> np.ndarray:
    return np.sum(W * np.asarray(m) ** 2, axis=-1)


def isotropic_table(lam: float, mu: float) -> np.ndarray:
    Q = np.zeros((6, 6))
    Q[:3, :3] = lam
    Q[np.arange(3), np.arange(3)] += 2 * mu
    Q[np.arange(3, 6), np.arange(3, 6)] = mu
    return Q


def _aniso_tensor_hessian() -> np.ndarray:
    A = np.diag([2.0, 2.0, 2.0, 4.0, 2.0, 2.0])
    A[2, 4] = A[4, 2] = 1.0
    return A


@dataclass(frozen=True, eq=False)
class EnergyDensity:
    """A convex density f on symmetric matrices.

    Attributes
    ----------
    kind : str
        One of ``isotropic``, ``p_norm``, ``quadratic_form``, ``aniso_example``
        or ``norton_hoff``.
    p : float
        Growth exponent.
    params : dict
        Kind parameters (``lam``, ``mu``, ``c``, ``d``).
    table : ndarray, optional
        Engineering 6x6 table for the quadratic kinds.
    """

    kind: str
    p: float
    params: dict = field(default_factory=dict)
    table: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if not self.p > 1:
            raise ValueError("exponent p must exceed 1")
        if self.table is not None:
            T = np.asarray(self.table, dtype=float)
            if T.shape != (6, 6):
                raise ValueError("quadratic table must be 6x6")
            if not np.allclose(T, T.T, atol=1e-12 * max(1.0, np.abs(T).max())):
                raise ValueError("quadratic table must be symmetric")
            ev = np.linalg.eigvalsh(0.5 * (T + T.T))
            if ev.min() < -1e-12 * max(1.0, np.abs(ev).max()):
                raise ValueError(f"quadratic table is not positive semi-definite (min eigenvalue {ev.min():.3g})")
            object.__setattr__(self, "table", 0.5 * (T + T.T))
        if self.kind == "p_norm" and not self.params.get("c", 0) > 0:
            raise ValueError("p_norm weight must be positive")
        if self.kind == "norton_hoff" and not (1 < self.p <= 2 and self.params["c"] > 0 and self.params["d"] >= 0):
            raise ValueError("norton_hoff needs 1 < p <= 2, c > 0, d >= 0")

    def __eq__(self, other):
        if not isinstance(other, EnergyDensity):
            return NotImplemented
        if (self.kind, self.p, self.params) != (other.kind, other.p, other.params):
            return False
        if self.table is None or other.table is None:
            return self.table is None and other.table is None
        return bool(np.array_equal(self.table, other.table))

    __hash__ = None

    # -- structure ---------------------------------------------------------
    @property
    def is_quadratic(self) -> bool:
        return self.table is not None

    @property
    def tensor_hessian(self) -> np.ndarray:
        """Hessian with respect to the tensor components m (quadratic kinds)."""
        return ENG[:, None] * self.table * ENG[None, :]

    def growth_constants(self) -> tuple[float, float]:
        """Constants (c, C) with c|M|^p <= f(M) <= C|M|^p."""
        if self.is_quadratic:
            s = 1.0 / np.sqrt(W)
            ev = np.linalg.eigvalsh(s[:, None] * self.tensor_hessian * s[None, :])
            return 0.5 * float(ev[0]), 0.5 * float(ev[-1])
        if self.kind == "p_norm":
            return self.params["c"], self.params["c"]
        if self.kind == "norton_hoff":
            return self.params["c"], self.params["c"] + self.params["d"]
        raise UnsupportedDensityError(self.kind)

    def scaled(self, lam: float) -> "EnergyDensity":
        """The density lam * f."""
        if lam <= 0:
            raise ValueError("scaling must be positive")
        if self.kind == "isotropic":
            return isotropic(lam * self.params["lam"], lam * self.params["mu"])
        if self.is_quadratic:
            return quadratic_form(lam * self.table)
        if self.kind == "p_norm":
            return p_norm(lam * self.params["c"], self.p)
        return norton_hoff(lam * self.params["c"], lam * self.params["d"], self.p)

    # -- evaluation on Voigt arrays ------------------------------------------
    def value(self, m, regularized: bool = False, delta: float = DELTA) -> np.ndarray:
        m = np.asarray(m, dtype=float)
        if self.is_quadratic:
            return 0.5 * np.einsum("...i,ij,...j->...", m, self.tensor_hessian, m)
        s = frobenius_sq(m)
        if self.kind == "p_norm":
            c = self.params["c"]
            if regularized and self.p != 2:
                return c * ((delta**2 + s) ** (self.p / 2) - delta**self.p)
            return c * s ** (self.p / 2)
        c, d = self.params["c"], self.params["d"]
        base = c * ((delta**2 + s) ** (self.p / 2) - delta**self.p) if regularized and self.p != 2 else c * s ** (self.p / 2)
        return base + d * ((1 + s) ** (self.p / 2) - 1)

    def grad(self, m, delta: float = DELTA) -> np.ndarray:
        """Derivative with respect to the tensor components (regularized for p != 2)."""
        m = np.asarray(m, dtype=float)
        if self.is_quadratic:
            return m @ self.tensor_hessian
        s = frobenius_sq(m)[..., None]
        q = self.p / 2
        out = self.params["c"] * self.p * (delta**2 + s) ** (q - 1) * W * m if self.p != 2 else 2 * self.params["c"] * W * m
        if self.kind == "norton_hoff":
            out = out + self.params["d"] * self.p * (1 + s) ** (q - 1) * W * m
        return out

    def hess(self, m, delta: float = DELTA) -> np.ndarray:
        m = np.asarray(m, dtype=float)
        if self.is_quadratic:
            return np.broadcast_to(self.tensor_hessian, m.shape[:-1] + (6, 6))
        s = frobenius_sq(m)[..., None, None]
        q = self.p / 2
        wm = W * m
        outer = wm[..., :, None] * wm[..., None, :]
        eye = np.diag(W)

        def block(coef, shift):
            a = (shift + s) ** (q - 1)
            b = (shift + s) ** (q - 2)
            return coef * self.p * (a * eye + (self.p - 2) * b * outer)

        if self.p == 2:
            out = 2 * self.params["c"] * np.broadcast_to(eye, m.shape[:-1] + (6, 6))
        else:
            out = block(self.params["c"], delta**2)
        if self.kind == "norton_hoff":
            out = out + block(self.params["d"], 1.0)
        return out

    # -- derived densities -------------------------------------------------
    def recession(self) -> "EnergyDensity":
        """The density f^{inf,p}(M) = limsup f(tM)/t^p."""
        if self.is_quadratic or self.kind == "p_norm":
            return self
        if self.kind == "norton_hoff":
            return p_norm(self.params["c"] + self.params["d"], self.p)
        raise UnsupportedDensityError(self.kind)

    def tangent_at_zero(self) -> "EnergyDensity":
        """The density g^{0,p}(M) = liminf g(tM)/t^p as t -> 0."""
        if self.is_quadratic or self.kind == "p_norm":
            return self
        if self.kind == "norton_hoff":
            if self.p == 2:
                return p_norm(self.params["c"] + self.params["d"], 2.0)
            return p_norm(self.params["c"], self.p)
        raise UnsupportedDensityError(self.kind)


def isotropic(lam: float, mu: float) -> EnergyDensity:
    """lam/2 (tr M)^2 + mu M:M."""
    if lam < 0 or mu <= 0:
        raise ValueError("isotropic density needs lam >= 0 and mu > 0")
    return EnergyDensity("isotropic", 2.0, {"lam": float(lam), "mu": float(mu)}, isotropic_table(lam, mu))


def p_norm(c: float, p: float) -> EnergyDensity:
    """c |M|^p (stored as a quadratic table when p = 2)."""
    if float(p) == 2.0:
        return EnergyDensity("p_norm", 2.0, {"c": float(c)}, 2.0 * c * np.diag(W) / (ENG[:, None] * ENG[None, :]))
    return EnergyDensity("p_norm", float(p), {"c": float(c)})


def norton_hoff(c: float, d: float, p: float) -> EnergyDensity:
    """c|M|^p + d((1 + |M|^2)^{p/2} - 1): p-growth, but not p-homogeneous."""
    return EnergyDensity("norton_hoff", float(p), {"c": float(c), "d": float(d)})


def quadratic_form(table) -> EnergyDensity:
    """gamma.Q.gamma / 2 with engineering shear strains."""
    return EnergyDensity("quadratic_form", 2.0, {}, np.asarray(table, dtype=float))


def quadratic_from_upper(entries) -> EnergyDensity:
    """Quadratic density from the 21 upper-triangle entries of Q, row by row."""
    e = np.asarray(entries, dtype=float)
    if e.size != 21:
        raise ValueError("expected 21 upper-triangle entries")
    Q = np.zeros((6, 6))
    Q[np.triu_indices(6)] = e
    return quadratic_form(Q + np.triu(Q, 1).T)


def aniso_example() -> EnergyDensity:
    """sum_ab M_ab^2 + M13^2 + M33^2 + M13 M33 + M23^2."""
    Q = _aniso_tensor_hessian() / ENG[:, None] / ENG[None, :]
    return EnergyDensity("aniso_example", 2.0, {}, Q)


def recession(f: EnergyDensity) -> EnergyDensity:
    return f.recession()


def tangent_at_zero(g: EnergyDensity) -> EnergyDensity:
    return g.tangent_at_zero()


# -- SymMat3 facing API ------------------------------------------------------

def eval(f: EnergyDensity, M) -> np.ndarray:  # noqa: A001
    """f(M) for a symmetric 3x3 matrix (or a stack of them)."""
    return f.value(sym_to_voigt(M))


def gradient(f: EnergyDensity, M) -> np.ndarray:
    """Frechet derivative G with f(M + H) = f(M) + G:H + o(H)."""
    g = f.grad(sym_to_voigt(M)) / W
    return voigt_to_sym(g)


def hessian_action(f: EnergyDensity, M, H) -> np.ndarray:
    """Second derivative applied to H, returned as a symmetric matrix."""
    k = np.einsum("...ij,...j->...i", f.hess(sym_to_voigt(M)), sym_to_voigt(H))
    return voigt_to_sym(k / W)


def planar_sym_gradient(value, jac) -> np.ndarray:
    """The planar strain e_y of a field from its 3x2 Jacobian.

    The in-plane block is the symmetrized gradient of the first two
    components, the (alpha, 3) entries are half the derivatives of the third
    component and the (3, 3) entry vanishes.  ``value`` does not enter.
    """
    J = np.asarray(jac, dtype=float)
    E = np.zeros(J.shape[:-2] + (3, 3))
    E[..., :2, :2] = 0.5 * (J[..., :2, :] + np.swapaxes(J[..., :2, :], -1, -2))
    E[..., 0, 2] = E[..., 2, 0] = 0.5 * J[..., 2, 0]
    E[..., 1, 2] = E[..., 2, 1] = 0.5 * J[..., 2, 1]
    return E


def random_sym(rng: np.random.Generator, n: int, scale: float = 1.0) -> np.ndarray:
    A = rng.normal(size=(n, 3, 3)) * scale
    return 0.5 * (A + np.swapaxes(A, -1, -2))


def fitted_lipschitz_constant(f: EnergyDensity, rng: np.random.Generator, n: int, scale: float = 3.0) -> float:
    """Smallest C with |f(M)-f(N)| <= C|M-N|(1+|M|^{p-1}+|N|^{p-1}) on a random sample."""
    M = random_sym(rng, n, scale) * rng.exponential(size=(n, 1, 1))
    N = M + random_sym(rng, n, scale) * rng.exponential(size=(n, 1, 1))
    fm, fn = eval(f, M), eval(f, N)
    nm = np.sqrt(np.sum(M * M, axis=(-1, -2)))
    nn = np.sqrt(np.sum(N * N, axis=(-1, -2)))
    dist = np.sqrt(np.sum((M - N) ** 2, axis=(-1, -2)))
    ratio = np.abs(fm - fn) / (dist * (1 + nm ** (f.p - 1) + nn ** (f.p - 1)))
    return float(np.max(ratio))


def from_config(kind: str, **kw) -> EnergyDensity:
    """Build a density from a kind name and keyword parameters."""
    kind = kind.lower()
    if kind == "isotropic":
        return isotropic(float(kw["lam"]), float(kw["mu"]))
    if kind == "p_norm":
        return p_norm(float(kw.get("c", 1.0)), float(kw["p"]))
    if kind == "norton_hoff":
        return norton_hoff(float(kw["c"]), float(kw["d"]), float(kw["p"]))
    if kind == "aniso_example":
        return aniso_example()
    if kind == "quadratic_form":
        entries = kw["table"]
        if isinstance(entries, str):
            entries = [float(x) for x in entries.replace(",", " ").split()]
        return quadratic_from_upper(entries)
    raise ValueError(f"unknown density kind {kind!r}")
