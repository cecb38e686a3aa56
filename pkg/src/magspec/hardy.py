"""Magnetic Hardy and Sobolev constants by channel, and the integer-flux test family.

In channel ``m`` and ``t = log r`` the magnetic form and the weighted norm of
``u = f(r) e^{i m theta}``, ``v(t) = f(e^t)``, are (per unit angle)

    int v'^2 + (Phi(e^t) + m)^2 v^2 dt     and     int rho(e^t) e^{2t} v^2 dt.

The best constant of the channel inequality is the bottom of the spectrum of
this pencil.  We discretize it with linear elements on a uniform ``t`` grid
with Dirichlet ends, so every reported constant is a Rayleigh-Ritz value:
an upper bound that decreases under domain growth and grid refinement.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np
from scipy import integrate

from ._kernels import tridiag_negcount_pencil
from .errors import DivergenceError, PreconditionError, ResolutionError
from .field import FieldProfile, flux_at, n0, total_flux
from .potential import PotentialProfile, weight_profile, weighted_norm

WEIGHTS = ("chi1", "U1", "inv_sq", "log_weight", "inv_sq_smooth", "inv_one_plus_r2")

# declared integrability of rho over R^2 (checked numerically in the tests)
INTEGRABLE = {"chi1": True, "U1": False, "inv_sq": False, "log_weight": True,
              "inv_sq_smooth": False, "inv_one_plus_r2": False}

_GX, _GW = np.polynomial.legendre.leggauss(4)
_GX = 0.5 * (_GX + 1.0)
_GW = 0.5 * _GW


def as_weight(weight) -> PotentialProfile:
    if isinstance(weight, PotentialProfile):
        return weight
    if weight not in WEIGHTS:
        raise ValueError(f"unknown weight {weight!r}; expected one of {WEIGHTS}")
    return weight_profile(weight)


def weight_integrable(weight) -> bool:
    """Numerical check of ``int rho dx < inf``."""
    try:
        return math.isfinite(weighted_norm(as_weight(weight), "L1_R2"))
    except DivergenceError:
        return False


def _extent(domain):
    if np.ndim(domain) == 0:
        T = float(domain)
        return -T, T
    lo, hi = (float(x) for x in domain)
    if not lo < hi:
        raise PreconditionError("domain needs lo < hi")
    return lo, hi


def _grid(domain, h):
    lo, hi = _extent(domain)
    n = max(int(math.ceil((hi - lo) / h)), 4)
    return np.linspace(lo, hi, n + 1)


def _assemble(nodes, cfun, pfun):
    """Tridiagonal stiffness and mass (interior nodes, Dirichlet ends)."""
    hs = np.diff(nodes)
    tq = nodes[:-1, None] + hs[:, None] * _GX[None, :]
    c = cfun(tq)
    p = pfun(tq)
    phiL = 1.0 - _GX
    phiR = _GX
    w = hs[:, None] * _GW[None, :]
    kLL = 1.0 / hs + np.sum(w * c * phiL * phiL, axis=1)
    kRR = 1.0 / hs + np.sum(w * c * phiR * phiR, axis=1)
    kLR = -1.0 / hs + np.sum(w * c * phiL * phiR, axis=1)
    mLL = np.sum(w * p * phiL * phiL, axis=1)
    mRR = np.sum(w * p * phiR * phiR, axis=1)
    mLR = np.sum(w * p * phiL * phiR, axis=1)
    n = nodes.size
    kd = np.zeros(n)
    wd = np.zeros(n)
    kd[:-1] += kLL
    kd[1:] += kRR
    wd[:-1] += mLL
    wd[1:] += mRR
    return kd[1:-1], kLR[1:-1], wd[1:-1], mLR[1:-1]


def smallest_pencil_eigenvalue(kd, ke, wd, we, rtol=1e-10):
    """Smallest ``mu`` with ``K v = mu M v`` by bisection on pivot counts."""
    if not np.any(wd > 0):
        raise ResolutionError("weight vanishes on every node of the discretization")
    x = np.sqrt(np.maximum(wd, 0.0))
    num = np.dot(kd * x, x) + 2 * np.dot(ke * x[:-1], x[1:])
    den = np.dot(wd * x, x) + 2 * np.dot(we * x[:-1], x[1:])
    hi = num / den
    lo = 0.0
    if tridiag_negcount_pencil(kd, ke, wd, we, 0.0)[0] > 0:
        raise ResolutionError("stiffness matrix is not positive definite")
    while tridiag_negcount_pencil(kd, ke, wd, we, hi)[0] == 0:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if tridiag_negcount_pencil(kd, ke, wd, we, mid)[0] >= 1:
            hi = mid
        else:
            lo = mid
        if hi - lo <= rtol * hi:
            break
    return hi


def _centrifugal(field_: FieldProfile, m):
    def c(t):
        return (flux_at(field_, np.exp(t)) + m) ** 2
    return c


def hardy_constant_channel(field_: FieldProfile, m: int, weight, domain=20.0, h: float = 0.02) -> float:
    """Rayleigh-Ritz value of the channel-``m`` Hardy constant for ``weight``.

    ``domain`` is a ``t``-interval ``(lo, hi)`` or a half-width ``T`` for
    ``(-T, T)``; ``h`` is the element size in ``t``.
    """
    w = as_weight(weight)
    nodes = _grid(domain, h)
    kd, ke, wd, we = _assemble(nodes, _centrifugal(field_, m), w.tdensity)
    return smallest_pencil_eigenvalue(kd, ke, wd, we)


@dataclass
class HardyResult:
    value: float
    argmin: int
    channels: dict
    tail_floor: float
    m_max: int
    domain: tuple
    h: float

    @property
    def certified_tail(self):
        return self.tail_floor >= self.value

    def as_dict(self):
        return {"value": self.value, "argmin": self.argmin, "tail_floor": self.tail_floor,
                "m_max": self.m_max, "certified_tail": self.certified_tail, "domain": list(self.domain),
                "h": self.h, "channels": {str(k): v for k, v in self.channels.items()}}


def _sup_density(w: PotentialProfile, lo, hi):
    t = np.linspace(lo, hi, 20001)
    return float(np.max(w.tdensity(t)))


def hardy_constant(field_: FieldProfile, weight, m_max: int | None = None, domain=20.0,
                   h: float = 0.02, m_cap: int = 200) -> HardyResult:
    """Minimum of the channel constants over ``|m| <= m_max``.

    Beyond ``n0`` the channel constant is at least ``m^2 / (2 sup P_rho)``
    (``P_rho = r^2 rho``); ``m_max`` grows until this floor for the first
    omitted channel exceeds the minimum found, so no channel outside the
    range can undercut it.
    """
    w = as_weight(weight)
    lo, hi = _extent(domain)
    base = n0(field_)
    m_max = base if m_max is None else int(m_max)
    if m_max < base:
        raise PreconditionError(f"m_max must be at least n0 = {base}")
    sup_p = _sup_density(w, lo, hi)
    channels = {}
    while True:
        for m in range(-m_max, m_max + 1):
            if m not in channels:
                channels[m] = hardy_constant_channel(field_, m, w, (lo, hi), h)
        best = min(channels, key=lambda k: (channels[k], abs(k)))
        floor = (m_max + 1) ** 2 / (2.0 * sup_p) if sup_p > 0 else math.inf
        if floor >= channels[best] or m_max >= m_cap:
            return HardyResult(channels[best], best, channels, floor, m_max, (lo, hi), h)
        m_max = min(max(m_max + 1, int(math.ceil(math.sqrt(2 * sup_p * channels[best])))), m_cap)


def hardy_trail(field_: FieldProfile, weight, domain=20.0, h: float = 0.02, steps: int = 2,
                refine: str = "grid", **kw) -> list:
    """Constants over ``steps`` refinements: ``refine="grid"`` halves ``h``,
    ``refine="domain"`` doubles the ``t``-extent."""
    lo, hi = _extent(domain)
    out = []
    for k in range(steps + 1):
        if refine == "grid":
            dom, hk = (lo, hi), h / 2 ** k
        elif refine == "domain":
            dom, hk = (lo * 2 ** k, hi * 2 ** k), h
        else:
            raise ValueError("refine must be 'grid' or 'domain'")
        res = hardy_constant(field_, weight, domain=dom, h=hk, **kw)
        out.append({"domain": list(dom), "h": hk, "value": res.value, "argmin": res.argmin})
    return out


# -- the test family ----------------------------------------------------------

@dataclass
class QuotientSample:
    numerator: float
    denominator: float
    n: float
    trial: str = "log_family"

    @property
    def quotient(self):
        if self.denominator <= 0:
            raise PreconditionError("quotient undefined: zero denominator")
        return self.numerator / self.denominator


def log_family(n):
    """``v_n(t)`` and ``v_n'(t)`` for ``u_n = min{(log rn)_+, 1, (log(en/r))_+}``."""
    ln = math.log(n)

    def v(t):
        t = np.asarray(t, dtype=float)
        return np.clip(np.minimum(np.minimum(t + ln, 1.0), ln + 1.0 - t), 0.0, None)

    def dv(t):
        t = np.asarray(t, dtype=float)
        up = (t > -ln) & (t < 1.0 - ln) & (t + ln < ln + 1.0 - t)
        down = (t > ln) & (t < ln + 1.0) & (ln + 1.0 - t < t + ln)
        return np.where(up, 1.0, 0.0) - np.where(down, 1.0, 0.0)
    return v, dv, [-ln, min(1.0 - ln, 0.5), max(ln, 0.5), ln + 1.0]


def _quad_pieces(f, pts, extra=()):
    pts = sorted(set(list(pts) + [x for x in extra if pts[0] < x < pts[-1]]))
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        if b > a:
            val, _ = integrate.quad(f, a, b, epsabs=0.0, epsrel=1e-10, limit=400)
            total += val
    return total


def _field_breaks_t(field_: FieldProfile):
    if field_.kind in ("step", "piecewise", "sampled"):
        return [math.log(b) for b in field_.breaks if b > 0]
    return []


def _integer_flux(field_):
    phi, cls = total_flux(field_)
    if cls == "non-integer":
        raise PreconditionError(f"the test family needs integer total flux, got {phi:g}")
    return int(round(phi))


def test_family_quotient(field_: FieldProfile, n: float, weight="inv_sq_smooth") -> QuotientSample:
    """Numerator and denominator of the Hardy quotient for ``u_n e^{-i k theta}``.

    Numerator ``2 pi int v'^2 + (Phi - k)^2 v^2 dt``; denominator
    ``2 pi int rho(e^t) e^{2t} v^2 dt``.
    """
    if n < 1:
        raise PreconditionError("n must be at least 1")
    k = _integer_flux(field_)
    w = as_weight(weight)
    v, dv, pts = log_family(n)
    c = _centrifugal(field_, -k)
    extra = _field_breaks_t(field_) + list(w.breaks_t())
    num = _quad_pieces(lambda t: float(dv(t) ** 2 + c(t) * v(t) ** 2), pts, extra)
    den = _quad_pieces(lambda t: float(w.tdensity(t) * v(t) ** 2), pts, extra)
    return QuotientSample(2 * math.pi * num, 2 * math.pi * den, n)


test_family_quotient.__test__ = False


# -- Sobolev quotients --------------------------------------------------------

@dataclass(frozen=True)
class Trial:
    """Separable trial ``u = f(r) e^{i m theta}`` from the trial library.

    kinds: ``log_family`` (params ``n``), ``gaussian`` (params ``width``;
    ``f = r^|m| exp(-r^2/width^2)``).
    """

    kind: str
    m: int = 0
    params: tuple = ()

    @property
    def p(self):
        return dict(self.params)

    def profile(self):
        """``(v, v', breakpoints)`` in ``t``."""
        if self.kind == "log_family":
            return log_family(self.p["n"])
        if self.kind == "gaussian":
            wd = self.p["width"]
            am = abs(self.m)

            def v(t):
                r = np.exp(np.asarray(t, dtype=float))
                return r ** am * np.exp(-(r / wd) ** 2)

            def dv(t):
                r = np.exp(np.asarray(t, dtype=float))
                return (am - 2 * (r / wd) ** 2) * r ** am * np.exp(-(r / wd) ** 2)
            hi = math.log(wd) + 3.0
            lo = hi - (40.0 / max(am, 1))
            return v, dv, [lo, math.log(wd), hi]
        raise ValueError(f"unknown trial kind {self.kind!r}")


def sobolev_quotient(field_: FieldProfile, q: float, trial: Trial) -> float:
    """``form(u) / (int |u|^q (1+|x|)^{-2} dx)^{2/q}`` for a separable trial."""
    if not q >= 2:
        raise PreconditionError("q must be at least 2")
    v, dv, pts = trial.profile()
    c = _centrifugal(field_, trial.m)
    extra = _field_breaks_t(field_)
    num = 2 * math.pi * _quad_pieces(lambda t: float(dv(t) ** 2 + c(t) * v(t) ** 2), pts, extra)
    wq = lambda t: float(abs(v(t)) ** q * math.exp(2 * t) / (1 + math.exp(t)) ** 2)
    den = (2 * math.pi * _quad_pieces(wq, pts, extra)) ** (2.0 / q)
    if den <= 0:
        raise PreconditionError("zero denominator")
    return num / den
