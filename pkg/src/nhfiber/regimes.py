"""Asymptotic parameters of a fiber scaling family and the effective model they select.

A family is given by the fiber radius r(eps) and stiffness l(eps).  From it

    k_eps = l r^2 |S| / eps^2,   kappa = lim r^p k_eps,
    gamma_eps = r^(2-p) / eps^2   (p != 2),   1 / (eps^2 |log r|)   (p = 2).

Symbolic families (sympy expressions in ``eps``) are resolved exactly through
limits of the logarithms.  Tabulated families are sampled on a geometric eps
ladder and resolved with a three-point ratio test.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import sympy

INF = math.inf
EPS = sympy.Symbol("eps", positive=True)
RATIO_TOL = 0.10


class IndeterminateRegimeError(ValueError):
    """The sampled quantities neither settle nor diverge monotonically."""


class InconsistentFamilyError(ValueError):
    """The family violates 0 < r << eps or yields an impossible (k, kappa) pair."""


@dataclass
class ScalingFamily:
    """Fiber radius and stiffness as functions of eps.

    Parameters
    ----------
    r, l : sympy expressions in ``EPS`` or callables of a float
    p : growth exponent
    area : |S|
    log_r, log_l : optional callables returning the logarithms directly
        (for families whose values overflow doubles)
    ladder : eps values for tabulated families (default 0.2 * 2^(-j/2))
    """

    r: object
    l: object
    p: float = 2.0
    area: float = math.pi
    log_r: Callable | None = None
    log_l: Callable | None = None
    ladder: tuple = tuple(0.2 * 2.0 ** (-j / 2) for j in range(12))

    @property
    def symbolic(self) -> bool:
        return isinstance(self.r, sympy.Expr) and isinstance(self.l, sympy.Expr)

    def logs(self, eps) -> tuple[float, float]:
        """(log r, log l) at a numeric eps."""
        if self.symbolic:
            lr = float(_log_expr(self.r).subs(EPS, eps))
            ll = float(_log_expr(self.l).subs(EPS, eps))
            return lr, ll
        lr = self.log_r(eps) if self.log_r is not None else math.log(self.r(eps))
        ll = self.log_l(eps) if self.log_l is not None else math.log(self.l(eps))
        return float(lr), float(ll)

    def scaled_l(self, c: float) -> "ScalingFamily":
        """Same family with l multiplied by the constant c."""
        if self.symbolic:
            return ScalingFamily(self.r, c * self.l, self.p, self.area, ladder=self.ladder)
        lc = math.log(c)
        log_l = (lambda e: self.log_l(e) + lc) if self.log_l is not None else (lambda e: math.log(self.l(e)) + lc)
        return ScalingFamily(self.r, None, self.p, self.area, self.log_r, log_l, self.ladder)


@dataclass
class RegimeReport:
    k: float
    kappa: float
    gamma_p: float
    p: float
    domain: str
    cf_branch: str
    degenerate: bool
    method: str
    samples: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        def enc(x):
            return "inf" if x == INF else x
        return {"k": enc(self.k), "kappa": enc(self.kappa), "gamma_p": enc(self.gamma_p), "p": self.p,
                "domain": self.domain, "cf_branch": self.cf_branch, "degenerate": self.degenerate,
                "method": self.method}


# ---------------------------------------------------------------------------
# labels


DOMAIN_DESCRIPTIONS = {
    "trivial": "fibers invisible: plain elasticity limit",
    "finite_k": "(v, theta) with v3, theta in W^1,p along the fiber, v3 = theta = 0 at x3 = 0",
    "v3_theta_zero": "(v, theta) with v3 = theta = 0",
    "finite_kappa": "(v, theta, w, delta), v_alpha in W^2,p, v3 = theta = 0, clamped at x3 = 0",
    "zero": "{0}",
}

CF_DESCRIPTIONS = {
    "zero": "c^f = 0",
    "plane": "gamma times the plane capacity of the recession density",
    "quadratic": "gamma times a quadratic form in v - u; theta = 0",
    "indicator": "u = v, theta = 0",
}


def domain_label(k: float, kappa: float) -> str:
    """Which admissible set the pair (k, kappa) selects."""
    if k < 0 or kappa < 0:
        raise ValueError("k and kappa are nonnegative")
    if kappa > 0 and k < INF:
        raise InconsistentFamilyError("kappa > 0 forces k = +inf when r -> 0")
    if k == 0:
        return "trivial"
    if k < INF:
        return "finite_k"
    if kappa == 0:
        return "v3_theta_zero"
    if kappa < INF:
        return "finite_kappa"
    return "zero"


def cf_branch(p: float, gamma: float) -> str:
    if gamma == 0:
        return "zero"
    if p > 2 or gamma == INF:
        return "indicator"
    if p == 2:
        return "quadratic"
    return "plane"


# ---------------------------------------------------------------------------
# limits


def _log_expr(e):
    return sympy.expand_log(sympy.log(e), force=True)


def _symbolic_limit(log_q) -> float:
    lim = sympy.limit(sympy.simplify(log_q), EPS, 0, "+")
    if lim == sympy.oo:
        return INF
    if lim == -sympy.oo:
        return 0.0
    if lim.is_finite:
        return float(sympy.exp(lim))
    raise IndeterminateRegimeError(f"no limit for exp({log_q})")


def ratio_test_limit(log_values, tol: float = RATIO_TOL) -> float:
    """Limit of a positive sequence given by its logarithms along a decreasing eps ladder.

    The last three consecutive ratios all within ``tol`` of 1 give a finite
    limit (the last value); all above 1 + tol give +inf; all below 1 - tol
    give 0.  Anything else is indeterminate.
    """
    lv = np.asarray(log_values, float)
    if len(lv) < 4:
        raise ValueError("the ratio test needs at least four ladder points")
    d = np.diff(lv)[-3:]
    if np.all((d >= math.log1p(-tol)) & (d <= math.log1p(tol))):
        return float(math.exp(lv[-1]))
    if np.all(d > math.log1p(tol)):
        return INF
    if np.all(d < math.log1p(-tol)):
        return 0.0
    raise IndeterminateRegimeError(f"ratios {np.exp(d)} neither settle nor diverge")


def _log_quantities(p, area, log_eps, log_r, log_l):
    log_k = log_l + 2 * log_r + math.log(area) - 2 * log_eps if not isinstance(log_l, sympy.Expr) else \
        log_l + 2 * log_r + sympy.log(area) - 2 * log_eps
    log_kappa = p * log_r + log_k
    if p == 2:
        log_gamma = -2 * log_eps - (sympy.log(-log_r) if isinstance(log_r, sympy.Expr) else math.log(-log_r))
    else:
        log_gamma = (2 - p) * log_r - 2 * log_eps
    return log_k, log_kappa, log_gamma


def classify(fam: ScalingFamily) -> RegimeReport:
    """Estimate (k, kappa, gamma) and select the admissible set and the c^f branch."""
    p = fam.p
    pf = float(p)
    if not pf > 1:
        raise ValueError("p must exceed 1")
    samples = {}
    if fam.symbolic:
        lr, ll = _log_expr(fam.r), _log_expr(fam.l)
        if sympy.limit(lr - sympy.log(EPS), EPS, 0, "+") != -sympy.oo:
            raise InconsistentFamilyError("the family must satisfy r << eps")
        q = _log_quantities(p, fam.area, sympy.log(EPS), lr, ll)
        k, kappa, gamma = (_symbolic_limit(x) for x in q)
        method = "symbolic"
    else:
        rows = []
        for e in fam.ladder:
            lr, ll = fam.logs(e)
            if not lr < math.log(e):
                raise InconsistentFamilyError(f"r >= eps at eps = {e}")
            rows.append(_log_quantities(p, fam.area, math.log(e), lr, ll))
        rows = np.array(rows)
        samples = {"eps": list(fam.ladder), "log_k": rows[:, 0].tolist(),
                   "log_kappa": rows[:, 1].tolist(), "log_gamma": rows[:, 2].tolist()}
        k, kappa, gamma = (ratio_test_limit(rows[:, j]) for j in range(3))
        method = "ratio_test"
    if kappa > 0 and k < INF:
        raise InconsistentFamilyError(f"inconsistent limits k = {k}, kappa = {kappa}")
    dom = domain_label(k, kappa)
    return RegimeReport(k, kappa, gamma, pf, dom, cf_branch(pf, gamma), k == 0 or gamma == 0, method, samples)


# ---------------------------------------------------------------------------
# outer radius band and normalized families


@dataclass
class RadiusBand:
    lower: float
    upper: float
    default: float
    binding: str


def _band_logs(fam: ScalingFamily, eps: float):
    lr, _ = fam.logs(eps)
    bounds = {"eps": math.log(eps)}
    if fam.p < 2:
        bounds["r^(2-p)"] = (2 - fam.p) * lr
    if fam.p == 2:
        bounds["1/sqrt|log r|"] = -0.5 * math.log(-lr)
    binding = min(bounds, key=bounds.get)
    return lr, bounds[binding], binding


def admissible_R(fam: ScalingFamily, eps: float) -> RadiusBand:
    """Band r << R << min(eps, r^(2-p), 1/sqrt|log r| for p = 2) at one eps."""
    lr, up, binding = _band_logs(fam, eps)
    if not up > lr:
        raise InconsistentFamilyError(f"empty radius band at eps = {eps}")
    return RadiusBand(math.exp(lr), math.exp(up), math.exp(0.5 * (lr + up)), binding)


def check_R(fam: ScalingFamily, log_R_of_eps: Callable | None = None, ladder=None,
            threshold: float = 0.1) -> dict:
    """Evaluate r/R and R/upper along the ladder; admissible when both decrease below ``threshold``.

    ``log_R_of_eps`` returns log R (default: the band midpoint in log scale).
    """
    ladder = fam.ladder if ladder is None else ladder
    lo, hi = [], []
    for e in ladder:
        lr, up, _ = _band_logs(fam, e)
        lR = 0.5 * (lr + up) if log_R_of_eps is None else log_R_of_eps(e)
        lo.append(lr - lR)
        hi.append(lR - up)
    lo, hi = np.array(lo), np.array(hi)
    lt = math.log(threshold)
    ok = bool(lo[-1] < lt and hi[-1] < lt and np.all(np.diff(lo[-3:]) < 0) and np.all(np.diff(hi[-3:]) < 0))
    return {"admissible": ok, "r_over_R": np.exp(lo).tolist(), "R_over_upper": np.exp(hi).tolist()}


def gamma_normalized_epsilon(r: float, p: float, gamma_target: float) -> float:
    """eps with gamma_eps(r) equal to gamma_target."""
    if p > 2:
        raise ValueError("a finite positive gamma is impossible for p > 2")
    if not p > 1:
        raise ValueError("p must exceed 1")
    if not gamma_target > 0:
        raise ValueError("gamma_target must be positive")
    if not 0 < r < 1:
        raise ValueError("r must lie in (0, 1)")
    if p == 2:
        return 1.0 / math.sqrt(gamma_target * abs(math.log(r)))
    return r ** ((2 - p) / 2) / math.sqrt(gamma_target)


def normalized_family(gamma_target: float, p: float, k_target: float = 1.0, area: float = math.pi) -> ScalingFamily:
    """Family with gamma_eps(r_eps) = gamma_target and k_eps = k_target for every eps.

    It inverts ``gamma_normalized_epsilon``: r = exp(-1/(gamma eps^2)) for
    p = 2 and (gamma eps^2)^(1/(2-p)) for p < 2.
    """
    if p == 2:
        r = sympy.exp(-1 / (gamma_target * EPS**2))
    else:
        r = (gamma_target * EPS**2) ** sympy.nsimplify(1 / (2 - p))
    l = k_target * EPS**2 / (r**2 * area)
    return ScalingFamily(r, l, p, area)


def reference_family(p: float = 2.0, area: float = math.pi) -> ScalingFamily:
    """r = exp(-1/eps^2), l = eps^2 / r^5: kappa infinite with gamma = 1 at p = 2."""
    r = sympy.exp(-1 / EPS**2)
    return ScalingFamily(r, EPS**2 / r**5, p, area)


def synthetic_families() -> list:
    """Twelve families with known (admissible set, c^f branch), for exhaustive checks.

    Each entry is (name, family, expected domain, expected branch).
    """
    e = EPS
    A = math.pi
    out = []

    def add(name, r, l, p, dom, br):
        out.append((name, ScalingFamily(r, l, p, A), dom, br))

    rexp = sympy.exp(-1 / e**2)
    # p = 2, gamma = 1
    add("p2_k0", rexp, e**3 / (rexp**2 * A), 2, "trivial", "quadratic")
    add("p2_k1", rexp, e**2 / (rexp**2 * A), 2, "finite_k", "quadratic")
    add("p2_kinf_kappa0", rexp, e**2 / (rexp**3 * A), 2, "v3_theta_zero", "quadratic")
    add("p2_kappa1", rexp, e**2 / (rexp**4 * A), 2, "finite_kappa", "quadratic")
    add("p2_kappa_inf", rexp, e**2 / rexp**5, 2, "zero", "quadratic")
    # p = 2, gamma = 0: |log r| >> 1/eps^2
    rthin = sympy.exp(-1 / e**3)
    add("p2_gamma0", rthin, e**2 / (rthin**2 * A), 2, "finite_k", "zero")
    # p = 3/2, r = eps^8 gives gamma = eps^2
    r15 = e**8
    add("p15_gamma0_k1", r15, e**2 / (r15**2 * A), sympy.Rational(3, 2), "finite_k", "zero")
    r15b = e**4   # gamma = r^(1/2)/eps^2 = 1
    add("p15_kappa1", r15b, e**2 / (r15b**sympy.Rational(7, 2) * A), sympy.Rational(3, 2), "finite_kappa", "plane")
    add("p15_kinf", r15b, e**2 / (r15b**3 * A), sympy.Rational(3, 2), "v3_theta_zero", "plane")
    r15c = e**2   # gamma = eps^-1 -> inf
    add("p15_gamma_inf", r15c, e**2 / (r15c**2 * A), sympy.Rational(3, 2), "finite_k", "indicator")
    # p = 3: gamma always infinite
    add("p3_k1", e**2, e**2 / (e**4 * A), 3, "finite_k", "indicator")
    add("p3_kappa1", e**2, e**2 / (e**10 * A), 3, "finite_kappa", "indicator")
    return out
