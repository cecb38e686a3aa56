import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from magspec.errors import AdmissibilityError, DivergenceError, DomainError, SingularityError
from magspec.potential import (AngularFactor, PotentialProfile, angular_average, bound_rhs, eval_potential,
                               make_U_beta, sup_angular, weight_profile, weighted_norm)

CHI = PotentialProfile.indicator_disk(1.0)


def test_eval_model_potentials():
    v = PotentialProfile.v_sigma(2.0)
    w = PotentialProfile.w_sigma(2.0)
    expected = math.exp(6) / 9 * math.log(3) ** -0.5
    assert eval_potential(v, math.exp(-3)) == pytest.approx(expected, rel=1e-12)
    assert eval_potential(w, math.exp(3)) == pytest.approx(math.exp(-12) * expected, rel=1e-12)
    assert eval_potential(CHI, 2.0) == 0.0


def test_model_potential_supports():
    v = PotentialProfile.v_sigma(1.5)
    w = PotentialProfile.w_sigma(1.5)
    assert eval_potential(v, math.exp(-2) * 1.0001) == 0.0
    assert eval_potential(w, math.exp(2) * 0.9999) == 0.0
    with pytest.raises(SingularityError):
        eval_potential(v, 0.0)


def test_angular_average_and_sup():
    half = PotentialProfile.indicator_disk(1.0, 2.0, AngularFactor.half_circle())
    assert angular_average(half, 0.5) == pytest.approx(1.0)
    assert sup_angular(half, 0.5) == pytest.approx(2.0)
    assert angular_average(CHI, 0.5) == eval_potential(CHI, 0.5)
    assert angular_average(PotentialProfile.zero(), 0.3) == 0.0
    assert sup_angular(PotentialProfile.zero(), 0.3) == 0.0


def test_u_beta():
    u1 = make_U_beta(1.0)
    assert eval_potential(u1, 2.0) == pytest.approx(0.25)
    assert eval_potential(u1, 0.5) == pytest.approx(1.0)
    assert eval_potential(make_U_beta(0.0), 2.0) == 0.0
    with pytest.raises(DomainError):
        make_U_beta(-1.0)


@pytest.mark.parametrize("wid,value", [("L1_R2", math.pi), ("L1_log_B1", math.pi / 2),
                                       ("L1_halfline_Linf", 0.5), ("weyl", 0.25)])
def test_closed_form_norms(wid, value):
    assert weighted_norm(CHI, wid) == pytest.approx(value, rel=1e-8)


def test_clr2_closed_form():
    assert weighted_norm(CHI, "clr2", a=1.0) == pytest.approx(17 * math.pi / 6, rel=1e-8)


def test_bound_rhs_examples():
    rep = bound_rhs("clr-radial", CHI)
    assert rep.components["L1_log_B1"] == pytest.approx(math.pi / 2, rel=1e-8)
    assert rep.components["L1_halfline_Linf"] == pytest.approx(0.5, rel=1e-8)
    assert bound_rhs("weyl", CHI).rhs_value == pytest.approx(0.25, rel=1e-8)
    assert bound_rhs("clr-mag-2", CHI, {"a": 1.0}).rhs_value == pytest.approx(17 * math.pi / 6, rel=1e-8)


def test_w_sigma_log_norm_diverges():
    # ||W_sigma log|x| ||_1 ~ int s^{-1/sigma} ds: finite only for sigma < 1
    with pytest.raises(DivergenceError):
        weighted_norm(PotentialProfile.w_sigma(2.0), "L1_log_R2")
    assert math.isfinite(weighted_norm(PotentialProfile.w_sigma(0.5), "L1_log_R2"))
    with pytest.raises(AdmissibilityError):
        bound_rhs("clr-radial-integer", PotentialProfile.w_sigma(2.0))


def test_w_sigma_l1_closed_form():
    # int_2^inf t^{-2} (log t)^{-1/sigma} dt via the s = log t substitution
    from scipy import integrate
    ref, _ = integrate.quad(lambda s: math.exp(-s) * s ** -0.5, math.log(2), math.inf)
    assert weighted_norm(PotentialProfile.w_sigma(2.0), "L1_halfline_Linf") == pytest.approx(ref, rel=1e-7)


@given(lam=st.floats(0.1, 50))
def test_linear_norm_scaling(lam):
    for wid in ("L1_R2", "L1_log_B1", "weyl", "L1_halfline_Linf"):
        assert weighted_norm(CHI.scaled(lam), wid) == pytest.approx(lam * weighted_norm(CHI, wid), rel=1e-8)


@given(lam=st.floats(0.1, 20), a=st.floats(0.2, 2))
def test_clr2_scaling(lam, a):
    assert weighted_norm(CHI.scaled(lam), "clr2", a=a) == pytest.approx(
        lam ** (1 + a) * weighted_norm(CHI, "clr2", a=a), rel=1e-7)


def test_entropy_superlinear():
    lams = [0.5, 1, 2, 4, 8]
    ratios = [weighted_norm(CHI.scaled(l), "clr1_entropy") / l for l in lams]
    assert all(b > a for a, b in zip(ratios[:-1], ratios[1:]))


@given(r=st.floats(1e-3, 3), th=st.floats(0, 2 * math.pi))
def test_sup_dominates_average(r, th):
    g = AngularFactor((0.0, 1.0, 4.0, 2 * math.pi), (0.3, 1.0, 0.0))
    p = PotentialProfile.steps([0, 0.5, 2.0], [1.0, 3.0], g)
    assert sup_angular(p, r) >= angular_average(p, r)


def test_radial_halfline_equals_l1_over_2pi():
    p = PotentialProfile.steps([0, 0.5, 2.0], [1.0, 3.0])
    assert weighted_norm(p, "L1_halfline_Linf") == pytest.approx(weighted_norm(p, "L1_R2") / (2 * math.pi), rel=1e-12)


def test_v_sigma_log_norm_diverges_for_sigma_above_one():
    with pytest.raises(DivergenceError):
        weighted_norm(PotentialProfile.v_sigma(2.0), "L1_log_B1")


def test_quadrature_tolerance_stable():
    p = PotentialProfile.v_sigma(0.5)
    a = weighted_norm(p, "L1_log_B1", tol=1e-8)
    b = weighted_norm(p, "L1_log_B1", tol=1e-10)
    assert abs(a - b) <= 1e-8 * abs(b)


def test_weights_nonnegative():
    t = np.linspace(-30, 30, 1001)
    for wid in ("chi1", "U1", "inv_sq", "log_weight", "inv_sq_smooth", "inv_one_plus_r2"):
        assert np.all(weight_profile(wid).tdensity(t) >= 0)
