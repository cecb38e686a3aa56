import math

import numpy as np
import pytest
import scipy.special as sp
from hypothesis import given, settings, strategies as st

from magspec.channels import BC, build_channel, channel_halfline, piecewise_q, simple_problem
from magspec.counting import (CountOptions, ScanResult, count_channel, count_negative_inertia,
                              count_negative_shooting, count_total, fit_exponent, grid_converged, inertia,
                              scan_coupling, shoot, weak_coupling_threshold)
from magspec.errors import PreconditionError
from magspec.field import FieldProfile
from magspec.potential import PotentialProfile

DISK = PotentialProfile.indicator_disk()


def const_problem(c, L=1.0):
    return simple_problem(lambda y: np.full_like(np.asarray(y, dtype=float), c), 0.0, L)


@pytest.mark.parametrize("count", [count_negative_shooting, count_negative_inertia])
def test_free_problem_has_no_negative_spectrum(count):
    assert count(const_problem(0.0)) == 0


@pytest.mark.parametrize("count", [count_negative_shooting, count_negative_inertia])
@pytest.mark.parametrize("mult", [0.5, 1.5, 3.7, 10.2, 50.5])
def test_constant_well_closed_form(count, mult):
    L = 2.0
    # eigenvalues (k pi / L)^2 - mult (pi / L)^2; negative for k^2 < mult
    expect = sum(1 for k in range(1, 20) if k * k < mult)
    assert count(const_problem(-mult * (math.pi / L) ** 2, L)) == expect


def test_disk_m0_channel_single_bound_state():
    ch = build_channel(FieldProfile.zero(), DISK, 0, 1.0)
    cc = count_channel(ch)
    assert cc.converged and cc.count == 1
    p = channel_halfline(ch, "log", cc.level)
    assert inertia(p, factor=64.0).count == 1


def _random_piecewise(rng):
    n = int(rng.integers(1, 6))
    L = float(rng.uniform(1.0, 6.0))
    brk = np.sort(rng.uniform(0, L, n - 1))
    vals = rng.uniform(-40.0, 10.0, n)
    left = BC.dirichlet() if rng.random() < 0.5 else BC.neumann()
    right = BC.dirichlet() if rng.random() < 0.5 else BC.neumann()
    return simple_problem(piecewise_q(brk, vals), 0.0, L, left, right, var="t", breaks=tuple(brk))


def test_oracles_agree_on_random_piecewise_problems():
    rng = np.random.default_rng(11)
    for _ in range(100):
        p = _random_piecewise(rng)
        a = grid_converged(p, "shooting")
        b = grid_converged(p, "inertia", max_doublings=10)
        assert a.converged and b.converged
        assert a.count == b.count


def test_shooting_is_grid_independent_for_piecewise_constant_q():
    rng = np.random.default_rng(3)
    for _ in range(20):
        p = _random_piecewise(rng)
        counts = {shoot(p, f).count for f in (0.5, 1.0, 4.0)}
        assert len(counts) == 1


def test_count_total_zero_coupling():
    rep = count_total(FieldProfile.step(1.0, 1.0), DISK, 0.0)
    assert rep.total == 0 and rep.converged


def test_count_total_weak_coupling_without_field():
    rep = count_total(FieldProfile.zero(), DISK, 1.0)
    assert rep.converged and rep.total >= 1
    assert rep.total == sum(rep.per_channel.values())


def test_count_total_ab_small_coupling_is_zero():
    rep = count_total(FieldProfile.aharonov_bohm(0.5), DISK, 0.05)
    assert rep.converged and rep.total == 0


def test_negative_coupling_rejected():
    with pytest.raises(PreconditionError):
        count_total(FieldProfile.zero(), DISK, -1.0)


@pytest.mark.parametrize("lam", [5.0, 20.0, 60.0])
def test_bessel_zero_oracle_without_field(lam):
    # channel m >= 1: one bound state per zero of J_{m-1} below sqrt(lam);
    # channel 0: one for each zero of J_1 below sqrt(lam) plus the weakly coupled state
    k = math.sqrt(lam)
    rep = count_total(FieldProfile.zero(), DISK, lam)
    assert rep.converged
    zeros = lambda n: int(np.sum(sp.jn_zeros(n, 40) < k))
    assert rep.per_channel[0] == 1 + zeros(1)
    for m in range(1, rep.cutoff + 1):
        assert rep.per_channel[m] == rep.per_channel[-m] == zeros(m - 1)


def test_landau_free_channels_for_compact_field():
    rep = count_total(FieldProfile.step(2.0, 1.0), PotentialProfile.zero(), 5.0)
    assert rep.total == 0 and all(v == 0 for v in rep.per_channel.values())


def test_scan_zero_potential():
    sc = scan_coupling(FieldProfile.step(1.0, 1.0), PotentialProfile.zero(), [1.0, 10.0, 100.0])
    assert sc.totals == [0, 0, 0]


def test_scan_rejects_unsorted_ladder():
    with pytest.raises(PreconditionError):
        scan_coupling(FieldProfile.zero(), DISK, [2.0, 1.0])


def test_fit_exact_power_law():
    lams = [10.0, 20.0, 40.0, 80.0]
    sig, c, res = fit_exponent((lams, [2 * l * l for l in lams]))
    assert sig == pytest.approx(2.0, abs=1e-12) and c == pytest.approx(2.0, rel=1e-10) and res < 1e-12


def test_fit_rounded_linear():
    lams = np.geomspace(40, 400, 8)
    sig, _, _ = fit_exponent((lams, np.ceil(lams / 4)), window=(40, 400))
    assert 0.95 <= sig <= 1.05


def test_fit_records_on_scan_and_rejects_zeros():
    sc = ScanResult([10.0, 20.0, 40.0, 80.0], [20, 40, 80, 160], [{}] * 4, [True] * 4)
    fit_exponent(sc)
    assert sc.fit["sigma"] == pytest.approx(1.0)
    with pytest.raises(PreconditionError):
        fit_exponent(([1.0, 2.0, 4.0], [0, 10, 20]))


def test_threshold_ab_half_is_positive_and_stable():
    f = FieldProfile.aharonov_bohm(0.5)
    a = weak_coupling_threshold(f, DISK, 10.0, level=0)
    b = weak_coupling_threshold(f, DISK, 10.0, level=1)
    assert a.lam_star > 0.05
    assert abs(a.lam_star - b.lam_star) <= 2e-3 * a.lam_star


def test_threshold_ordering_in_flux():
    lo = weak_coupling_threshold(FieldProfile.aharonov_bohm(0.25), DISK, 10.0, level=0).lam_star
    hi = weak_coupling_threshold(FieldProfile.aharonov_bohm(0.5), DISK, 10.0, level=0).lam_star
    assert lo <= hi


def test_threshold_without_field_decreases_with_domain():
    f = FieldProfile.zero()
    vals = [weak_coupling_threshold(f, DISK, 1.0, level=k, rel=1e-2).lam_star for k in (0, 1, 2)]
    assert vals[0] > vals[1] > vals[2] > 0


@settings(max_examples=8)
@given(lam=st.floats(0.5, 40.0), factor=st.floats(1.05, 3.0))
def test_count_monotone_in_coupling(lam, factor):
    f = FieldProfile.step(1.0, 1.0)
    assert count_total(f, DISK, lam).total <= count_total(f, DISK, lam * factor).total


def test_dirichlet_domain_growth_is_monotone():
    ch = build_channel(FieldProfile.zero(), DISK, 0, 0.3)
    counts = [count_negative_shooting(channel_halfline(ch, "log", k)) for k in range(4)]
    assert counts == sorted(counts)


@pytest.mark.parametrize("field", [FieldProfile.step(1.0, 1.0), FieldProfile.aharonov_bohm(0.5)])
@pytest.mark.parametrize("lam", [3.0, 15.0])
def test_variational_split_inequality(field, lam):
    total = count_total(field, DISK, lam).total
    doubled = count_total(field, DISK, 2 * lam)
    m0 = doubled.per_channel[0]
    rest = doubled.total - m0
    assert total <= m0 + rest
