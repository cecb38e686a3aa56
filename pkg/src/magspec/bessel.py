"""Modified Bessel functions I_nu, K_nu of real order nu >= 0 (exponentially scaled).

Algorithm (per argument x > 0):

* ``x < 2``: Temme's series for ``K_mu``, ``K_{mu+1}`` with ``|mu| <= 1/2``;
* ``2 <= x``: Steed's continued fraction (CF2) for the same pair;
* ``x >= 15`` with ``4 nu^2 < x``: Hankel's asymptotic series instead;
* ``K_nu`` by forward recurrence in the order;
* ``I_nu`` from its ascending series for ``x < 2``, otherwise from the continued
  fraction for ``I'_nu / I_nu`` (CF1) closed with the Wronskian
  ``I K' - I' K = -1/x``.

All routines return ``Ie = I e^{-x}``, ``Ke = K e^{x}`` and the scaled
derivatives ``Ie' = I' e^{-x}``, ``Ke' = K' e^{x}``.
"""
import math

import numpy as np
from numba import njit

EPS = 1e-16
FPMIN = 1e-300
MAXIT = 100000
XMIN = 2.0

# Taylor coefficients of 1/Gamma(z) (z^1 .. z^16)
_RGAM = np.array([
    1.0, 0.5772156649015329, -0.6558780715202538, -0.0420026350340952, 0.1665386113822915,
    -0.0421977345555443, -0.0096219715278770, 0.0072189432466630, -0.0011651675918591,
    -0.0002152416741149, 0.0001280502823882, -0.0000201348547807, -0.0000012504934821,
    0.0000011330272320, -0.0000002056338417, 0.0000000061160950,
])


@njit(cache=True)
def _temme_gammas(mu):
    """``gam1, gam2, 1/Gamma(1+mu), 1/Gamma(1-mu)`` for ``|mu| <= 1/2``."""
    gampl = 1.0 / math.gamma(1.0 + mu)
    gammi = 1.0 / math.gamma(1.0 - mu)
    if abs(mu) < 0.1:
        m2 = mu * mu
        # 1/Gamma(1+z) = sum c_{j+1} z^j; split odd and even parts
        g1 = 0.0
        g2 = 0.0
        p = 1.0
        for j in range(7):
            g1 -= _RGAM[2 * j + 1] * p
            g2 += _RGAM[2 * j] * p
            p *= m2
        return g1, g2, gampl, gammi
    return (gammi - gampl) / (2.0 * mu), 0.5 * (gammi + gampl), gampl, gammi


@njit(cache=True)
def _hankel(nu, x):
    """Scaled ``(Ie, Ke)`` from Hankel's expansion (large x, moderate nu)."""
    m = 4.0 * nu * nu
    sk = 1.0
    si = 1.0
    term = 1.0
    prev = 1e300
    for k in range(1, 200):
        term *= (m - (2 * k - 1) ** 2) / (k * 8.0 * x)
        if abs(term) > prev:
            break
        prev = abs(term)
        sk += term
        si += term if k % 2 == 0 else -term
        if abs(term) < EPS * 1e-2:
            break
    ke = math.sqrt(math.pi / (2.0 * x)) * sk
    ie = si / math.sqrt(2.0 * math.pi * x)
    return ie, ke


@njit(cache=True)
def _i_series(nu, x):
    """Scaled ``I_nu`` from the ascending series (all terms positive)."""
    y = 0.25 * x * x
    term = math.exp(nu * math.log(0.5 * x) - math.lgamma(nu + 1.0) - x)
    s = term
    for k in range(1, MAXIT):
        term *= y / (k * (k + nu))
        s += term
        if term < EPS * s:
            break
    return s


@njit(cache=True)
def bessel_ik_scaled(nu, x):
    """Return ``(Ie, Ke, Ie', Ke')`` for order ``nu >= 0`` at ``x > 0``."""
    if x >= 15.0 and 4.0 * (nu + 1.0) ** 2 < x:
        ie, ke = _hankel(nu, x)
        ie1, ke1 = _hankel(nu + 1.0, x)
        iep = ie1 + nu / x * ie
        kep = -ke1 + nu / x * ke
        return ie, ke, iep, kep
    nl = int(nu + 0.5)
    xmu = nu - nl
    xmu2 = xmu * xmu
    xi = 1.0 / x
    xi2 = 2.0 * xi
    # CF1: I'_nu / I_nu
    h = nu * xi
    if h < FPMIN:
        h = FPMIN
    b = xi2 * nu
    d = 0.0
    c = h
    for _ in range(MAXIT):
        b += xi2
        d = 1.0 / (b + d)
        c = b + 1.0 / c
        de = c * d
        h = de * h
        if abs(de - 1.0) < EPS:
            break
    ril = FPMIN
    ripl = h * ril
    ril1 = ril
    rip1 = ripl
    fact = nu * xi
    for _ in range(nl, 0, -1):
        ritemp = fact * ril + ripl
        fact -= xi
        ripl = fact * ritemp + ril
        ril = ritemp
    f = ripl / ril
    if x < XMIN:
        x2 = 0.5 * x
        pimu = math.pi * xmu
        fct = 1.0 if abs(pimu) < EPS else pimu / math.sin(pimu)
        d = -math.log(x2)
        e = xmu * d
        fct2 = 1.0 if abs(e) < EPS else math.sinh(e) / e
        gam1, gam2, gampl, gammi = _temme_gammas(xmu)
        ff = fct * (gam1 * math.cosh(e) + gam2 * fct2 * d)
        s = ff
        e = math.exp(e)
        p = 0.5 * e / gampl
        q = 0.5 / (e * gammi)
        c = 1.0
        d = x2 * x2
        s1 = p
        for i in range(1, MAXIT):
            ff = (i * ff + p + q) / (i * i - xmu2)
            c *= d / i
            p /= (i - xmu)
            q /= (i + xmu)
            de = c * ff
            s += de
            de1 = c * (p - i * ff)
            s1 += de1
            if abs(de) < abs(s) * EPS:
                break
        ex = math.exp(x)
        rkmu = s * ex
        rk1 = s1 * xi2 * ex
    else:
        b = 2.0 * (1.0 + x)
        d = 1.0 / b
        h = d
        delh = d
        q1 = 0.0
        q2 = 1.0
        a1 = 0.25 - xmu2
        q = a1
        c = a1
        a = -a1
        s = 1.0 + q * delh
        for i in range(2, MAXIT):
            a -= 2 * (i - 1)
            c = -a * c / i
            qnew = (q1 - b * q2) / a
            q1 = q2
            q2 = qnew
            q += c * qnew
            b += 2.0
            d = 1.0 / (b + a * d)
            delh = (b * d - 1.0) * delh
            h += delh
            dels = q * delh
            s += dels
            if abs(dels / s) < EPS:
                break
        h = a1 * h
        rkmu = math.sqrt(math.pi / (2.0 * x)) / s
        rk1 = rkmu * (xmu + x + 0.5 - h) * xi
    # scaled K: K e^x; the Wronskian then yields I e^{-x}
    rkmup = xmu * xi * rkmu - rk1
    rimu = xi / (f * rkmu - rkmup)
    ri = rimu * ril1 / ril
    rip = rimu * rip1 / ril
    for i in range(1, nl + 1):
        rktemp = (xmu + i) * xi2 * rk1 + rkmu
        rkmu = rk1
        rk1 = rktemp
    rk = rkmu
    rkp = nu * xi * rkmu - rk1
    if x < XMIN:
        # the Wronskian step cancels for small x; the ascending series does not
        ri = _i_series(nu, x)
        rip = _i_series(nu + 1.0, x) + nu * xi * ri
    return ri, rk, rip, rkp


@njit(cache=True)
def _vec(nu, x, out):
    for i in range(x.shape[0]):
        a, b, c, d = bessel_ik_scaled(nu, x[i])
        out[0, i] = a
        out[1, i] = b
        out[2, i] = c
        out[3, i] = d


def ik_scaled(nu, x):
    """Vectorized ``(Ie, Ke, Ie', Ke')`` arrays for order ``nu`` at points ``x > 0``."""
    if nu < 0:
        raise ValueError("order must be nonnegative")
    xa = np.atleast_1d(np.asarray(x, dtype=float)).ravel()
    if np.any(xa <= 0):
        raise ValueError("argument must be positive")
    out = np.empty((4, xa.shape[0]))
    _vec(float(nu), xa, out)
    shape = np.shape(x)
    return tuple(o.reshape(shape) if shape else float(o[0]) for o in out)


def iv(nu, x):
    ie, _, _, _ = ik_scaled(nu, x)
    return ie * np.exp(x)


def kv(nu, x):
    _, ke, _, _ = ik_scaled(nu, x)
    return ke * np.exp(-np.asarray(x, dtype=float))


def wronskian_residual(nu, x):
    """Relative residual of ``x (I K' - I' K) + 1`` (scale factors cancel)."""
    ie, ke, iep, kep = ik_scaled(nu, x)
    return np.abs(np.asarray(x) * (ie * kep - iep * ke) + 1.0)
