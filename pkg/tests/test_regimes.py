import math

import numpy as np
import pytest
from hypothesis import given
import hypothesis.strategies as st

from nhfiber.regimes import (EPS, InconsistentFamilyError, IndeterminateRegimeError, ScalingFamily, cf_branch,
                             check_R, classify, domain_label, gamma_normalized_epsilon, normalized_family,
                             reference_family, ratio_test_limit, synthetic_families)


def test_reference_family():
    rep = classify(reference_family())
    assert rep.kappa == math.inf
    assert rep.gamma_p == pytest.approx(1.0, abs=1e-12)
    assert rep.domain == "zero" and rep.cf_branch == "quadratic"
    assert rep.as_dict()["kappa"] == "inf"


def test_k_normalized_family():
    fam = ScalingFamily(EPS**3, EPS**2 / (EPS**6 * math.pi), 2.0, math.pi)
    assert classify(fam).k == pytest.approx(1.0)


@pytest.mark.parametrize("name,fam,dom,br", synthetic_families(), ids=lambda x: x if isinstance(x, str) else "")
def test_synthetic_table(name, fam, dom, br):
    rep = classify(fam)
    assert (rep.domain, rep.cf_branch) == (dom, br)


def test_domain_labels():
    assert domain_label(0, 0) == "trivial"
    assert domain_label(2.0, 0) == "finite_k"
    assert domain_label(math.inf, 0) == "v3_theta_zero"
    assert domain_label(math.inf, 3.0) == "finite_kappa"
    assert domain_label(math.inf, math.inf) == "zero"
    with pytest.raises(InconsistentFamilyError):
        domain_label(1.0, 1.0)


def test_cf_branches():
    assert cf_branch(1.5, 0.0) == "zero"
    assert cf_branch(3.0, 1.0) == "indicator"
    assert cf_branch(2.0, math.inf) == "indicator"
    assert cf_branch(2.0, 1.0) == "quadratic"
    assert cf_branch(1.5, 1.0) == "plane"


@given(st.floats(-5, 5), st.floats(0.15, 3.0))
def test_ratio_test_on_geometric_sequences(c, rate):
    up = [c + j * rate for j in range(6)]
    assert ratio_test_limit(up) == math.inf
    assert ratio_test_limit([-x for x in up]) == 0.0
    assert ratio_test_limit([c] * 6) == pytest.approx(math.exp(c))


def test_ratio_test_indeterminate():
    with pytest.raises(IndeterminateRegimeError):
        ratio_test_limit([0, 1, 0, 1, 0, 1])
    with pytest.raises(ValueError):
        ratio_test_limit([0, 1])


@pytest.mark.parametrize("p,g", [(2.0, 0.5), (2.0, 3.0), (1.5, 2.0)])
def test_normalized_family_hits_gamma(p, g):
    rep = classify(normalized_family(g, p))
    assert rep.gamma_p == pytest.approx(g, rel=1e-9)
    assert rep.k == pytest.approx(1.0, rel=1e-9)


def test_gamma_normalized_epsilon_inputs():
    assert gamma_normalized_epsilon(math.exp(-4), 2.0, 1.0) == pytest.approx(0.5)
    for args in [(0.1, 3.0, 1.0), (0.1, 2.0, 0.0), (1.5, 2.0, 1.0), (0.1, 1.0, 1.0)]:
        with pytest.raises(ValueError):
            gamma_normalized_epsilon(*args)


def test_tabulated_family_matches_symbolic():
    sym = reference_family()
    num = ScalingFamily(None, None, 2.0, math.pi, log_r=lambda e: -1 / e**2, log_l=lambda e: 2 * math.log(e) + 5 / e**2)
    a, b = classify(sym), classify(num)
    assert b.method != a.method
    assert (a.domain, a.cf_branch) == (b.domain, b.cf_branch)
    assert b.gamma_p == pytest.approx(1.0, rel=0.1)


def test_radius_band_admissible():
    out = check_R(reference_family())
    assert out["admissible"]
    assert np.all(np.array(out["r_over_R"]) < 1)
