import math

import numpy as np
import pytest
import scipy.special as sp
from hypothesis import given, strategies as st

from magspec.bs_bounds import (BSKernelSpec, assemble_radial_bound, aux_count, block_counts, bessel_green_diag,
                               bessel_green_diag_limit, bs_channel_bound, delta_n, eq1dim_ratio, eq1dim_sweep,
                               g0_kernel_diag, g0_log_bound, log_weight_gap)
from magspec.counting import count_total, CountOptions
from magspec.errors import AdmissibilityError, DomainError
from magspec.field import FieldProfile
from magspec.potential import PotentialProfile

DISK = PotentialProfile.indicator_disk()


def scipy_green(delta, a, b, kappa, r):
    """Resolvent diagonal from scipy Bessel functions (unscaled)."""
    w = lambda x: -sp.ivp(delta, x * kappa) / sp.kvp(delta, x * kappa)
    I, K = sp.iv(delta, r * kappa), sp.kv(delta, r * kappa)
    wa, wb = w(a), w(b)
    return r * (I + wa * K) * (I + wb * K) / (wb - wa)


def test_green_matches_ode_oracle():
    # value from an independent boundary-value solve of (T + kappa^2) G = delta_r
    g = bessel_green_diag(BSKernelSpec(1.0, 1.0, 2.0, 0.7), 1.5)
    assert g == pytest.approx(1.13426355791, rel=1e-9)


@pytest.mark.parametrize("delta, a, b, kappa, r", [(1.0, 1.0, 2.0, 0.7, 1.5), (0.3, 0.5, 4.0, 2.0, 1.0),
                                                    (2.5, 0.1, 1.0, 5.0, 0.4)])
def test_green_matches_scipy(delta, a, b, kappa, r):
    g = bessel_green_diag(BSKernelSpec(delta, a, b, kappa), r)
    assert g == pytest.approx(scipy_green(delta, a, b, kappa, r), rel=1e-10)


def test_green_half_line_ends():
    g = bessel_green_diag(BSKernelSpec(1.0, 0.0, math.inf, 0.5), 2.0)
    assert g == pytest.approx(2.0 * sp.iv(1, 1.0) * sp.kv(1, 1.0), rel=1e-12)


def test_green_kappa_limit_example():
    g = bessel_green_diag(BSKernelSpec(1.0, 1.0, 2.0, 1e-4), 1.5)
    lim = bessel_green_diag_limit(1.0, 1.0, 2.0, 1.5)
    assert abs(g - lim) / lim < 1e-6


def test_green_kappa_limit_lattice():
    worst = 0.0
    for d in (0.25, 0.5, 1.0, 2.0, 3.0):
        for a, b in ((0.5, 1.0), (1.0, 2.0), (0.2, 5.0), (1.0, 10.0)):
            for r in np.linspace(a, b, 7)[1:-1]:
                g = bessel_green_diag(BSKernelSpec(d, a, b, 1e-6), r)
                lim = bessel_green_diag_limit(d, a, b, r)
                worst = max(worst, abs(g - lim) / lim)
    assert worst < 1e-5


def test_exact_limit_value():
    # r (1 + (a/r)^2)(1 + (r/b)^2) / (2 (1 - (a/b)^2)) at delta=1, a=1, b=2, r=1
    assert bessel_green_diag_limit(1.0, 1.0, 2.0, 1.0) == pytest.approx(5.0 / 3.0, rel=1e-14)
    assert bessel_green_diag_limit(1.0, 0.0, math.inf, 3.0) == pytest.approx(1.5, rel=1e-14)


def test_printed_limit_values():
    assert bessel_green_diag_limit(1.0, 1.0, 2.0, 1.0, form="printed") == pytest.approx(3.6, rel=1e-14)
    for r in (0.3, 1.0, 4.0):
        assert bessel_green_diag_limit(2.0, 0.0, 10.0, r, form="printed") == pytest.approx(r, rel=1e-14)


@given(d=st.floats(0.1, 4), a=st.floats(0.01, 5), ratio=st.floats(1.01, 50), u=st.floats(0, 1),
       c=st.floats(0.01, 100))
def test_limit_homogeneity(d, a, ratio, u, c):
    b = a * ratio
    r = a + u * (b - a)
    for form in ("exact", "printed"):
        lhs = bessel_green_diag_limit(d, c * a, c * b, c * r, form)
        assert lhs == pytest.approx(c * bessel_green_diag_limit(d, a, b, r, form), rel=1e-10)


@given(d=st.floats(0.1, 4), a=st.floats(0.01, 5), ratio=st.floats(1.01, 50), u=st.floats(0.01, 0.99),
       k=st.floats(0.01, 10))
def test_green_positive(d, a, ratio, u, k):
    b = a * ratio
    r = a + u * (b - a)
    assert bessel_green_diag(BSKernelSpec(d, a, b, k), r) > 0
    assert bessel_green_diag_limit(d, a, b, r) > 0


def test_green_domain_errors():
    with pytest.raises(DomainError):
        bessel_green_diag(BSKernelSpec(1.0, 1.0, 2.0, 0.0), 1.5)
    with pytest.raises(DomainError):
        bessel_green_diag(BSKernelSpec(1.0, 1.0, 2.0, 1.0), 2.5)
    with pytest.raises(DomainError):
        bessel_green_diag_limit(0.0, 1.0, 2.0, 1.5)
    with pytest.raises(DomainError):
        BSKernelSpec(1.0, 2.0, 1.0)


def test_channel_bound_examples():
    assert bs_channel_bound(1.0, PotentialProfile.zero()) == 0.0
    assert bs_channel_bound(1.0, DISK) == pytest.approx(0.25, rel=1e-8)
    assert bs_channel_bound(1.0, DISK, form="printed") == pytest.approx(1.0, rel=1e-8)
    lo, hi, ok = aux_count(1.0, DISK)
    assert ok and hi <= 0.25


def test_channel_bound_dominates_counts():
    rng = np.random.default_rng(5)
    for _ in range(50):
        d = float(rng.uniform(0.2, 3.0))
        rad = float(rng.uniform(0.5, 3.0))
        W = PotentialProfile.indicator_disk(rad, float(rng.uniform(1.0, 60.0)))
        a = float(rng.choice([0.0, rng.uniform(0.05, 0.5)]))
        b = float(rng.choice([math.inf, rng.uniform(1.0, 4.0)]))
        bound = bs_channel_bound(d, W, a, b)
        lo, hi, ok = aux_count(d, W, a, b)
        assert ok and lo == hi
        assert hi <= bound + 1e-9, (d, rad, a, b)


def test_g0_kernel_positive_and_log_limit():
    r = np.geomspace(1e-10, 0.99, 50)
    assert np.all(g0_kernel_diag(r) > 0)
    tiny = np.array([1e-200, 1e-250, 1e-300])
    ratio = g0_kernel_diag(tiny) / (tiny * np.abs(np.log(tiny)))
    np.testing.assert_allclose(ratio, 1.0, rtol=5e-3)
    with pytest.raises(DomainError):
        g0_kernel_diag(1.0)


def test_g0_matches_scipy():
    r = np.array([0.01, 0.3, 0.9])
    ref = r * sp.i0(r) * (sp.k0(r) + sp.i0(r) * sp.k1(1.0) / sp.i1(1.0))
    np.testing.assert_allclose(g0_kernel_diag(r), ref, rtol=1e-12)


def test_g0_log_bound_stable():
    gb = g0_log_bound()
    assert gb.stable
    assert gb.c_hat == pytest.approx(2.2402, rel=1e-3)
    r = np.geomspace(1e-12, 0.999, 3001)
    assert np.all(g0_kernel_diag(r) <= gb.c_hat * r * (1 + np.abs(np.log(r))) * (1 + 1e-9))


def test_assembly_helpers():
    assert delta_n(1) == pytest.approx(1 / math.log(2))
    assert log_weight_gap() == pytest.approx(0.342, abs=2e-3)


def test_assembly_zero_potential():
    assert assemble_radial_bound(FieldProfile.step(1.0, 1.0), PotentialProfile.zero(), 3.0).total == 0.0


def test_assembly_non_integer_dominates_m0_count():
    f = FieldProfile.step(1.0, 1.0)
    asm = assemble_radial_bound(f, DISK, 1.0)
    assert asm.mode == "non-integer" and math.isfinite(asm.total)
    m0 = count_total(f, DISK, 1.0, CountOptions(channels=(0,))).total
    assert asm.total >= m0


def test_assembly_mode_mismatch():
    with pytest.raises(AdmissibilityError):
        assemble_radial_bound(FieldProfile.step(1.0, 1.0), DISK, 1.0, mode="integer")


def test_assembly_integer_w2_is_truncated_and_flagged():
    asm = assemble_radial_bound(FieldProfile.step(2.0, 1.0), PotentialProfile.w_sigma(2.0), 20.0, r_trunc=1e3)
    assert asm.mode == "integer" and math.isfinite(asm.total)
    assert any("truncated" in f for f in asm.flags)
    ps = asm.truncation["partial_sums"]
    assert ps["102"] > 10 * ps["12"]


@pytest.mark.parametrize("field, lam", [(FieldProfile.step(1.0, 1.0), 30.0), (FieldProfile.step(2.0, 1.0), 30.0)])
def test_block_dominance(field, lam):
    for name, (bound, lo, hi) in block_counts(field, DISK, lam, n_blocks=5).items():
        assert lo <= hi <= bound + 1e-9, name


def test_eq1dim_ratio_printed_bounded_exact_blows_up():
    W = PotentialProfile.indicator_disk(10.0)
    printed = eq1dim_sweep(1.0, W, n=30, form="printed")
    # printed factor (2/delta)(1 + corr) with corr <= 1 at delta = 1
    assert printed.max_ratio <= 4.0 + 1e-9
    # the exact kernel grows like 1/log(b/a) on thin intervals
    thin = eq1dim_ratio(1.0, W, 1.0, math.exp(0.01))
    wide = eq1dim_ratio(1.0, W, 1.0, math.exp(2.0))
    assert thin == pytest.approx(100.0, rel=1e-2)
    assert thin > 100 * wide
