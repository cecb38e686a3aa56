import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from magspec.channels import (build_channel, channel_cutoff, channel_halfline, liouville_halfline, log_transform)
from magspec.counting import count_negative_inertia, count_negative_shooting, count_total, CountOptions
from magspec.errors import DomainError
from magspec.field import FieldProfile, n0
from magspec.potential import PotentialProfile

ZERO_V = PotentialProfile.zero()
DISK = PotentialProfile.indicator_disk()
R = np.geomspace(1e-3, 1e3, 97)


def test_centrifugal_examples():
    ch = build_channel(FieldProfile.zero(), ZERO_V, 1, 0.0)
    np.testing.assert_allclose(ch.effective_centrifugal(R), 1 / R ** 2, rtol=1e-14)
    ch = build_channel(FieldProfile.aharonov_bohm(0.5), ZERO_V, 0, 0.0)
    np.testing.assert_allclose(ch.effective_centrifugal(R), 0.25 / R ** 2, rtol=1e-14)
    ch = build_channel(FieldProfile.step(2.0, 1.0), ZERO_V, -1, 0.0)
    out = R[R >= 1]
    np.testing.assert_allclose(ch.effective_centrifugal(out), 0.0, atol=1e-15)


@given(b0=st.floats(0.1, 5), rad=st.floats(0.2, 3), m=st.integers(-6, 6))
def test_centrifugal_times_r2_is_amplitude(b0, rad, m):
    f = FieldProfile.step(b0, rad)
    ch = build_channel(f, ZERO_V, m, 0.0)
    np.testing.assert_allclose(ch.effective_centrifugal(R) * R ** 2, ch.amp(np.log(R)), rtol=1e-12)


@given(b0=st.floats(0.1, 5), rad=st.floats(0.2, 3), k=st.integers(1, 5))
def test_centrifugal_floor_beyond_n0(b0, rad, k):
    f = FieldProfile.step(b0, rad)
    for m in (n0(f) + k, -(n0(f) + k)):
        ch = build_channel(f, ZERO_V, m, 0.0)
        assert np.all(ch.effective_centrifugal(R) >= m * m / (2 * R ** 2) * (1 - 1e-12))


@pytest.mark.parametrize("m, expect", [(0, -0.25), (1, 0.75)])
def test_liouville_zero_field(m, expect):
    ch = build_channel(FieldProfile.zero(), DISK, m, 2.0)
    p = liouville_halfline(ch, 1e-3, 10.0)
    r = np.array([0.1, 0.5, 2.0, 5.0])
    vhat = (r <= 1).astype(float)
    np.testing.assert_allclose(p.q(r), expect / r ** 2 - 2.0 * vhat, rtol=1e-13)


def test_liouville_ab_half():
    ch = build_channel(FieldProfile.aharonov_bohm(0.5), DISK, 0, 3.0)
    p = liouville_halfline(ch, 1e-3, 10.0)
    np.testing.assert_allclose(p.q(np.array([0.2, 0.9, 2.0])), [-3.0, -3.0, 0.0], atol=1e-13)


def test_log_transform_free_m0_is_zero():
    ch = build_channel(FieldProfile.zero(), ZERO_V, 0, 0.0)
    p = log_transform(liouville_halfline(ch, 1e-3, 1e3))
    t = np.linspace(-6, 6, 25)
    np.testing.assert_allclose(p.q(t), 0.0, atol=1e-12)
    assert p.variable == "t"


def test_log_transform_needs_positive_end():
    ch = build_channel(FieldProfile.zero(), ZERO_V, 0, 0.0)
    p = log_transform(liouville_halfline(ch, 0.5, 10.0))
    with pytest.raises(DomainError):
        log_transform(p)


@pytest.mark.parametrize("sigma", [1.0, 2.0])
def test_canceled_flux_w_sigma_forms(sigma):
    lam = 0.7
    ch = build_channel(FieldProfile.step(2.0, 1.0), PotentialProfile.w_sigma(sigma), -1, lam)
    t = np.array([2.5, 4.0, 10.0, 40.0])
    np.testing.assert_allclose(ch.qfunc("t")(t), -lam * t ** -2 * np.log(t) ** (-1 / sigma), rtol=1e-12)
    s = np.log(t)
    np.testing.assert_allclose(ch.qfunc("s")(s), 0.25 - lam * s ** (-1 / sigma), rtol=1e-12)
    # composing the numeric maps reproduces the closed forms
    p = log_transform(log_transform(liouville_halfline(ch, math.exp(2.2), 1e12)))
    np.testing.assert_allclose(p.q(s), 0.25 - lam * s ** (-1 / sigma), rtol=1e-9)


def test_cutoff_examples():
    assert channel_cutoff(FieldProfile.zero(), DISK, 10.0) == 5
    f = FieldProfile.step(1.0, 1.0)
    assert channel_cutoff(f, ZERO_V, 0.0) == n0(f)


@pytest.mark.parametrize("field, lam", [(FieldProfile.zero(), 10.0), (FieldProfile.aharonov_bohm(0.5), 1.0)])
def test_channels_beyond_cutoff_are_empty(field, lam):
    M = channel_cutoff(field, DISK, lam)
    opts = CountOptions(channels=tuple(range(M + 1, M + 4)) + tuple(range(-M - 3, -M)))
    rep = count_total(field, DISK, lam, opts)
    assert rep.total == 0


def test_b0_symmetry_identical_problems():
    f = FieldProfile.zero()
    for m in (1, 2, 5):
        a = liouville_halfline(build_channel(f, DISK, m, 3.0))
        b = liouville_halfline(build_channel(f, DISK, -m, 3.0))
        r = np.geomspace(1e-6, 1e3, 200)
        np.testing.assert_array_equal(a.q(r), b.q(r))
        assert a.domain == b.domain


def test_ab_half_degeneracy():
    f = FieldProfile.aharonov_bohm(0.5)
    a = channel_halfline(build_channel(f, DISK, 0, 3.0), "log")
    b = channel_halfline(build_channel(f, DISK, -1, 3.0), "log")
    t = np.linspace(*a.domain, 300)
    np.testing.assert_array_equal(a.q(t), b.q(t))


def _random_instance(rng):
    kind = rng.integers(3)
    if kind == 0:
        f = FieldProfile.step(rng.uniform(0.2, 3.0), rng.uniform(0.3, 2.0))
    elif kind == 1:
        f = FieldProfile.aharonov_bohm(rng.uniform(0.05, 0.95))
    else:
        f = FieldProfile.zero()
    V = PotentialProfile.indicator_disk(rng.uniform(0.5, 2.0), rng.uniform(0.5, 2.0))
    return f, V, float(rng.uniform(1.0, 30.0)), int(rng.integers(-2, 3))


def test_count_preserved_between_r_and_t():
    rng = np.random.default_rng(7)
    for _ in range(20):
        f, V, lam, m = _random_instance(rng)
        ch = build_channel(f, V, m, lam)
        pr = liouville_halfline(ch, 1e-2, 20.0)
        pt = log_transform(pr, ch)
        nr = count_negative_shooting(pr)
        nt = count_negative_shooting(pt)
        assert nr == nt, (f, V, lam, m)


def test_count_preserved_between_t_and_s():
    lam = 3.0
    ch = build_channel(FieldProfile.step(2.0, 1.0), PotentialProfile.w_sigma(2.0), -1, lam)
    pr = liouville_halfline(ch, math.exp(1.2), 1e8)
    pt = log_transform(pr, ch)
    ps = log_transform(pt, ch)
    counts = {count_negative_shooting(p) for p in (pt, ps)}
    assert len(counts) == 1
    assert count_negative_inertia(ps) in counts


def test_shift_never_increases_count():
    f = FieldProfile.zero()
    base = count_total(f, DISK, 20.0).total
    shifted = count_total(f, DISK, 20.0, shift=[(1.0, "inv_one_plus_r2")]).total
    assert shifted <= base
