"""Radial electric potentials, weighted norms and bound right-hand sides.

Every radial profile is handled through the log-variable density

    P(t) = r^2 V(r),   r = e^t,

because ``V r dr = P dt``.  Weighted integrals become integrals of ``P``
against polynomial or log-polynomial weights in ``t``, and the tails of the
borderline model potentials are integrated in ``s = log|t|`` where their
densities are algebraic.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np
from scipy import integrate

from .errors import AdmissibilityError, DivergenceError, DomainError, SingularityError

TAU_QUAD = 1e-8
TWO_PI = 2 * math.pi

RADIAL_KINDS = (
    "indicator_disk", "steps", "v_sigma", "w_sigma", "sampled", "expression",
    "u_beta", "bump", "inv_sq", "log_weight", "inv_sq_smooth", "inv_one_plus_r2", "zero",
)

# kinds that are not integrable against r dr at infinity or at the origin
_NONINTEGRABLE = {"u_beta", "inv_sq", "inv_sq_smooth", "inv_one_plus_r2"}


@dataclass(frozen=True)
class AngularFactor:
    """Piecewise-constant angular profile ``g`` on ``[0, 2 pi)`` with ``0 <= g <= 1``."""

    breaks: tuple
    values: tuple

    def __post_init__(self):
        b = np.asarray(self.breaks, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if len(b) != len(v) + 1 or b[0] != 0 or abs(b[-1] - TWO_PI) > 1e-12 or np.any(np.diff(b) <= 0):
            raise ValueError("angular breaks must run from 0 to 2*pi with one value per arc")
        if np.any(v < 0) or np.any(v > 1):
            raise ValueError("angular factor must satisfy 0 <= g <= 1")

    @classmethod
    def half_circle(cls) -> "AngularFactor":
        return cls((0.0, math.pi, TWO_PI), (1.0, 0.0))

    @property
    def arcs(self):
        b = np.asarray(self.breaks)
        return np.diff(b), np.asarray(self.values)

    @property
    def mean(self) -> float:
        w, v = self.arcs
        return float(np.sum(w * v) / TWO_PI)

    @property
    def sup(self) -> float:
        return float(max(self.values))

    def __call__(self, theta):
        th = np.mod(np.asarray(theta, dtype=float), TWO_PI)
        idx = np.clip(np.searchsorted(self.breaks, th, side="right") - 1, 0, len(self.values) - 1)
        return np.asarray(self.values)[idx]


@dataclass(frozen=True)
class PotentialProfile:
    """Immutable radial potential with an optional angular factor.

    ``params`` is a tuple of ``(name, value)`` pairs so the profile stays
    hashable; use :attr:`p` for dictionary access.
    """

    kind: str
    params: tuple = ()
    angular: AngularFactor | None = None
    scale: float = 1.0
    _fn: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in RADIAL_KINDS:
            raise ValueError(f"unknown potential kind {self.kind!r}")
        if self.scale < 0:
            raise ValueError("potential scale must be nonnegative")
        p = self.p
        if self.kind in ("v_sigma", "w_sigma") and not p["sigma"] > 0:
            raise ValueError("sigma must be positive")
        if self.kind == "expression":
            code = compile(p["expr"], "<potential>", "eval")
            ns = {k: getattr(np, k) for k in ("exp", "log", "sqrt", "abs", "where", "minimum", "maximum",
                                              "sin", "cos", "pi", "tanh", "cosh", "sinh", "log1p", "expm1")}
            fn = lambda r: eval(code, {"__builtins__": {}}, dict(ns, r=r))  # noqa: E731
            object.__setattr__(self, "_fn", fn)
        if self.kind == "steps":
            br = p["breaks"]
            if br[0] != 0 or len(p["values"]) != len(br) - 1 or any(v < 0 for v in p["values"]):
                raise ValueError("steps need breaks from 0, one nonnegative value per interval")
        if self.kind == "sampled":
            if any(v < 0 for v in p["v"]):
                raise ValueError("sampled potential must be nonnegative")
        if self.kind == "u_beta" and p["beta"] < 0:
            raise ValueError("beta must be nonnegative")

    @property
    def p(self) -> dict:
        return dict(self.params)

    # -- constructors -----------------------------------------------------
    @classmethod
    def indicator_disk(cls, radius=1.0, height=1.0, angular=None):
        return cls("indicator_disk", (("radius", float(radius)), ("height", float(height))), angular)

    @classmethod
    def steps(cls, breaks, values, angular=None):
        return cls("steps", (("breaks", tuple(float(b) for b in breaks)),
                             ("values", tuple(float(v) for v in values))), angular)

    @classmethod
    def v_sigma(cls, sigma):
        return cls("v_sigma", (("sigma", float(sigma)),))

    @classmethod
    def w_sigma(cls, sigma):
        return cls("w_sigma", (("sigma", float(sigma)),))

    @classmethod
    def sampled(cls, r, v, angular=None):
        return cls("sampled", (("r", tuple(float(x) for x in r)), ("v", tuple(float(x) for x in v))), angular)

    @classmethod
    def expression(cls, expr: str, support: float, singular_origin=False):
        """Closed-form ``V(r)`` given as a numpy expression in ``r``, zero for ``r >= support``."""
        return cls("expression", (("expr", expr), ("support", float(support)),
                                  ("singular_origin", bool(singular_origin))))

    @classmethod
    def zero(cls):
        return cls("zero")

    def scaled(self, lam: float) -> "PotentialProfile":
        return PotentialProfile(self.kind, self.params, self.angular, self.scale * float(lam))

    # -- metadata ---------------------------------------------------------
    @property
    def singularity_tag(self) -> str:
        if self.kind == "v_sigma" or (self.kind == "expression" and self.p["singular_origin"]):
            return "origin-log-square"
        return "none"

    @property
    def decay_tag(self) -> str:
        if self.kind == "w_sigma":
            return "borderline"
        if self.kind in ("indicator_disk", "steps", "v_sigma", "sampled", "expression", "bump", "zero"):
            return "compact"
        if self.kind == "u_beta" and self.p["beta"] == 0:
            return "compact"
        return "integrable" if self.kind == "log_weight" else "slow"

    @property
    def is_zero(self) -> bool:
        if self.kind == "zero" or self.scale == 0:
            return True
        if self.angular is not None and self.angular.sup == 0:
            return True
        if self.kind == "steps":
            return not any(self.p["values"])
        return False

    def support_t(self):
        """``(t_lo, t_hi)`` with ``P = 0`` outside (``+-inf`` when unbounded)."""
        k, p = self.kind, self.p
        if self.is_zero:
            return (0.0, 0.0)
        if k == "indicator_disk":
            return (-math.inf, math.log(p["radius"]))
        if k == "steps":
            vals = p["values"]
            last = max(i for i, v in enumerate(vals) if v > 0)
            return (-math.inf, math.log(p["breaks"][last + 1]))
        if k == "v_sigma":
            return (-math.inf, -2.0)
        if k == "w_sigma":
            return (2.0, math.inf)
        if k == "sampled":
            return (math.log(p["r"][0]) if p["r"][0] > 0 else -math.inf, math.log(p["r"][-1]))
        if k == "expression":
            return (-math.inf, math.log(p["support"]))
        if k == "bump" or (k == "u_beta" and p["beta"] == 0):
            return (-math.inf, 0.0)
        return (-math.inf, math.inf)

    def breaks_t(self):
        """Kinks and jumps of ``P`` in the log variable."""
        k, p = self.kind, self.p
        if k == "indicator_disk":
            return [math.log(p["radius"])]
        if k == "steps":
            return [math.log(b) for b in p["breaks"][1:]]
        if k == "v_sigma":
            return [-2.0]
        if k == "w_sigma":
            return [2.0]
        if k == "sampled":
            return [math.log(x) for x in p["r"] if x > 0]
        if k == "expression":
            return [math.log(p["support"])]
        if k in ("u_beta", "bump"):
            return [0.0]
        return []

    # -- pointwise evaluation -------------------------------------------
    def tdensity(self, t):
        """Radial density ``P(t) = r^2 V(r)`` at ``r = e^t`` (radial part only)."""
        t = np.asarray(t, dtype=float)
        k, p = self.kind, self.p
        with np.errstate(all="ignore"):
            if k == "zero":
                out = np.zeros_like(t)
            elif k == "indicator_disk":
                out = np.where(t < math.log(p["radius"]), p["height"] * np.exp(2 * t), 0.0)
            elif k == "steps":
                br = np.asarray(p["breaks"])
                vals = np.asarray(p["values"])
                r = np.exp(t)
                idx = np.searchsorted(br, r, side="right") - 1
                v = np.where(idx < len(vals), vals[np.clip(idx, 0, len(vals) - 1)], 0.0)
                out = v * np.exp(2 * t)
            elif k == "v_sigma":
                at = np.abs(t)
                out = np.where(t < -2.0, at ** -2.0 * np.log(at) ** (-1.0 / p["sigma"]), 0.0)
            elif k == "w_sigma":
                out = np.where(t > 2.0, t ** -2.0 * np.log(np.abs(t)) ** (-1.0 / p["sigma"]), 0.0)
            elif k == "sampled":
                rr = np.asarray(p["r"])
                r = np.exp(t)
                out = np.interp(r, rr, np.asarray(p["v"]), left=p["v"][0], right=0.0) * r * r
                out = np.where((r > rr[-1]) | (r < rr[0]) & (rr[0] > 0), 0.0, out)
            elif k == "expression":
                r = np.exp(t)
                v = np.broadcast_to(np.asarray(self._fn(r), dtype=float), r.shape)
                out = np.where(r < p["support"], v * r * r, 0.0)
            elif k == "u_beta":
                b2 = p["beta"] ** 2
                if b2 == 0:
                    out = _bump_density(t)
                else:
                    out = np.where(t <= 0, b2 * np.exp(2 * t), b2)
            elif k == "bump":
                out = _bump_density(t)
            elif k == "inv_sq":
                out = np.full_like(t, p["eps"])
            elif k == "log_weight":
                out = 1.0 / (np.exp(-2 * t) + t * t)
            elif k == "inv_sq_smooth":
                out = 1.0 / (1.0 + np.exp(-t)) ** 2
            elif k == "inv_one_plus_r2":
                out = 1.0 / (1.0 + np.exp(-2 * t))
        out = np.nan_to_num(np.asarray(out, dtype=float), nan=0.0, posinf=0.0)
        if np.any(out < 0):
            raise DomainError("potential profile became negative")
        return self.scale * out

    def log_tail_density(self, side: int, s):
        """``log P(t)`` at ``t = side * e^s`` for large ``|t|``, in closed form."""
        s = np.asarray(s, dtype=float)
        k, p = self.kind, self.p
        ls = math.log(self.scale) if self.scale > 0 else -math.inf
        with np.errstate(all="ignore"):
            T = np.exp(s)
            if k in ("w_sigma", "v_sigma"):
                active = (k == "w_sigma") == (side > 0)
                out = -2 * s - np.log(s) / p["sigma"] if active else np.full_like(s, -np.inf)
            elif k == "inv_sq":
                out = np.full_like(s, math.log(p["eps"]))
            elif k == "log_weight":
                out = (-2 * s - np.log1p(np.exp(-2 * T - 2 * s)) if side > 0
                       else -2 * T - np.log1p(np.exp(-2 * T + 2 * s)))
            elif k == "inv_sq_smooth":
                out = -2 * np.log1p(np.exp(-T)) - (0 if side > 0 else 2 * T)
            elif k == "inv_one_plus_r2":
                out = -np.log1p(np.exp(-2 * T)) - (0 if side > 0 else 2 * T)
            elif k == "u_beta" and p["beta"] > 0:
                out = 2 * math.log(p["beta"]) - (0 if side > 0 else 2 * T)
            elif side > 0:
                out = np.full_like(s, -np.inf)
            else:
                # bounded near the origin: P ~ V(0+) r^2
                v0 = float(self.tdensity(np.array([-50.0]))[0] * math.exp(100.0)) / max(self.scale, 1e-300)
                out = (math.log(v0) - 2 * T) if v0 > 0 else np.full_like(s, -np.inf)
                return out + ls
        return out + ls

    def vardensity(self, var: str, y):
        """Density of ``V`` in a transformed variable: ``T'(y)^2 P(T(y))``.

        ``var`` is one of ``t``, ``s`` (``t = e^s``), ``si`` (``t = -e^{-si}``)
        or ``r`` (returns ``V(r)`` itself).
        """
        y = np.asarray(y, dtype=float)
        k, p = self.kind, self.p
        with np.errstate(all="ignore"):
            if var == "t":
                return self.tdensity(y)
            if var == "r":
                if np.any(y <= 0):
                    raise DomainError("r must be positive")
                return self.tdensity(np.log(y)) / (y * y)
            if var == "s":
                if k == "w_sigma":
                    return self.scale * np.where(y > math.log(2.0), np.abs(y) ** (-1.0 / p["sigma"]), 0.0)
                lp = self.log_tail_density(+1, y) if k in ("log_weight", "inv_sq_smooth", "inv_one_plus_r2",
                                                            "inv_sq", "u_beta") else None
                if lp is not None:
                    return np.minimum(np.exp(2 * y + lp), 1e200)
                out = np.exp(2 * y) * self.tdensity(np.exp(y))
                return np.nan_to_num(out, nan=0.0, posinf=1e200)
            if var == "si":
                if k == "v_sigma":
                    return self.scale * np.where(y < -math.log(2.0), np.abs(y) ** (-1.0 / p["sigma"]), 0.0)
                tau = np.exp(-y)
                out = tau * tau * self.tdensity(-tau)
                return np.nan_to_num(out, nan=0.0, posinf=1e200)
        raise ValueError(f"unknown variable {var!r}")


def _bump_density(t):
    # rho(r) = (1 - r^2)^2 on [0, 1], times r^2
    r2 = np.exp(2 * np.minimum(t, 0.0))
    return np.where(t < 0, (1 - r2) ** 2 * r2, 0.0)


def make_U_beta(beta: float) -> PotentialProfile:
    """``min(beta^2, beta^2 / r^2)``; ``beta = 0`` gives the fixed bump ``(1 - r^2)^2`` on the unit disc."""
    if beta < 0:
        raise DomainError("beta must be nonnegative")
    return PotentialProfile("u_beta", (("beta", float(beta)),))


def weight_profile(wid: str, eps: float = 1.0) -> PotentialProfile:
    """Hardy weights as potential profiles (``chi1``, ``U1``, ``inv_sq``, ``log_weight``, ``inv_sq_smooth``,
    ``inv_one_plus_r2``)."""
    if wid == "chi1":
        return PotentialProfile.indicator_disk(1.0)
    if wid == "U1":
        return make_U_beta(1.0)
    if wid == "inv_sq":
        return PotentialProfile("inv_sq", (("eps", float(eps)),))
    if wid in ("log_weight", "inv_sq_smooth", "inv_one_plus_r2", "bump"):
        return PotentialProfile(wid)
    raise ValueError(f"unknown weight {wid!r}")


# -- pointwise API ----------------------------------------------------------

def eval_potential(potential: PotentialProfile, r, theta=None):
    """Pointwise ``V(r, theta)``; the angular factor multiplies when ``theta`` is given."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise DomainError("r must be nonnegative")
    if np.any(r == 0):
        if potential.singularity_tag != "none" or potential.kind == "inv_sq":
            raise SingularityError("potential is singular at the origin")
    with np.errstate(divide="ignore"):
        t = np.log(np.where(r > 0, r, 1.0))
    val = np.where(r > 0, potential.tdensity(t) / np.where(r > 0, r * r, 1.0), 0.0)
    if np.any(r == 0):
        val = np.where(r == 0, potential.tdensity(np.array(-40.0)) * math.exp(80.0), val)
    if theta is not None and potential.angular is not None:
        val = val * potential.angular(theta)
    return float(val) if val.ndim == 0 else val


def angular_average(potential: PotentialProfile, r):
    """``V-hat(r)``: the angular mean."""
    g = potential.angular.mean if potential.angular is not None else 1.0
    return eval_potential(potential, r) * g


def sup_angular(potential: PotentialProfile, r):
    """``V-tilde(r)``: the angular supremum."""
    g = potential.angular.sup if potential.angular is not None else 1.0
    return eval_potential(potential, r) * g


# -- weighted norms ---------------------------------------------------------

WEIGHT_IDS = ("L1_R2", "L1_halfline_Linf", "L1_log_B1", "L1_log_R2", "clr1_log_weight",
              "clr1_entropy", "clr2", "weyl")


def _core_extent(potential):
    br = [abs(b) for b in potential.breaks_t()]
    return max([8.0] + [2 * b + 1 for b in br])


def _integrate_t(f_core, f_tail, potential, t_lo, t_hi, tol):
    """Integrate a density over ``(t_lo, t_hi)`` (which may be infinite).

    ``f_core(t)`` is used on the finite core, ``f_tail(side, s)`` on the tails
    ``|t| = e^s`` (already multiplied by the Jacobian ``e^s``).
    """
    c = _core_extent(potential)
    lo, hi = max(t_lo, -c), min(t_hi, c)
    pts = sorted({b for b in potential.breaks_t() + [-2.0, 0.0, 2.0] if lo < b < hi})
    total = 0.0
    if hi > lo:
        edges = [lo] + pts + [hi]
        for a, b in zip(edges[:-1], edges[1:]):
            val, _ = integrate.quad(f_core, a, b, epsabs=0.0, epsrel=tol * 1e-2, limit=400)
            total += val
    for side, bound in ((-1, t_lo), (+1, t_hi)):
        if side * bound <= c:
            continue
        if abs(bound) != math.inf:
            # finite bound beyond the core
            a, b = sorted((side * c, bound))
            val, _ = integrate.quad(f_core, a, b, epsrel=tol * 1e-2, limit=400)
            total += val
            continue
        total += _tail_sum(lambda s: f_tail(side, s), math.log(c), tol, total)
    return total


def _tail_sum(g, s0, tol, reference):
    """Sum ``int_{s0}^inf g`` over doubling chunks with a Cauchy-type test."""
    acc = 0.0
    a = s0
    incs = []
    while a < 1e300:
        b = 2 * a if a > 1 else a + 1.0
        val, _ = integrate.quad(g, a, b, epsrel=tol * 1e-2, limit=400)
        acc += val
        incs.append(val)
        scale = abs(reference) + abs(acc)
        if val == 0.0 and len(incs) > 2:
            return acc
        if len(incs) >= 3 and incs[-2] > 0:
            rho = val / incs[-2]
            if rho < 0.95:
                remaining = val * rho / (1 - rho)
                if remaining < 0.1 * tol * scale:
                    return acc + remaining
            if len(incs) >= 8 and all(incs[i] >= 0.999 * incs[i - 1] for i in range(-4, 0)):
                raise DivergenceError(
                    f"tail partial sums fail the Cauchy test (chunk increments {incs[-3]:.3g}, {incs[-2]:.3g}, {val:.3g})")
        a = b
    raise DivergenceError("tail integral did not settle before the representable range")


def weighted_norm(potential: PotentialProfile, weight_id: str, a: float | None = None,
                  tol: float = TAU_QUAD) -> float:
    """Weighted integral of ``V`` named by ``weight_id`` (see :data:`WEIGHT_IDS`).

    ``a`` is the exponent parameter of ``clr1_log_weight`` and ``clr2``.
    """
    if weight_id not in WEIGHT_IDS:
        raise ValueError(f"unknown weight id {weight_id!r}")
    if weight_id in ("clr1_log_weight", "clr2"):
        if a is None or a <= 0:
            raise ValueError(f"{weight_id} needs an exponent a > 0")
    if potential.is_zero:
        return 0.0
    ang = potential.angular
    gmean = ang.mean if ang is not None else 1.0
    gsup = ang.sup if ang is not None else 1.0
    t_lo, t_hi = potential.support_t()
    P = potential.tdensity
    lt = potential.log_tail_density

    def lin(wcore, wtail_log):
        fc = lambda t: float(P(np.array(t)) * wcore(t))
        ft = lambda side, s: float(np.exp(lt(side, np.array(s)) + s + wtail_log(s)))
        return fc, ft

    if weight_id in ("L1_R2", "weyl", "L1_halfline_Linf"):
        fc, ft = lin(lambda t: 1.0, lambda s: 0.0)
        base = _integrate_t(fc, ft, potential, t_lo, t_hi, tol)
        if weight_id == "L1_halfline_Linf":
            return gsup * base
        val = TWO_PI * gmean * base
        return val / (4 * math.pi) if weight_id == "weyl" else val
    if weight_id in ("L1_log_B1", "L1_log_R2"):
        fc, ft = lin(lambda t: abs(t), lambda s: s)
        hi = min(t_hi, 0.0) if weight_id == "L1_log_B1" else t_hi
        if hi <= t_lo:
            return 0.0
        return TWO_PI * gmean * _integrate_t(fc, ft, potential, t_lo, hi, tol)
    if weight_id == "clr1_log_weight":
        fc, ft = lin(lambda t: (1 + abs(t)) ** (1 + a), lambda s: (1 + a) * (s + math.log1p(math.exp(-s))))
        return TWO_PI * gmean * _integrate_t(fc, ft, potential, t_lo, t_hi, tol)

    # nonlinear weights: integrate per angular arc
    if ang is None:
        arcs = [(TWO_PI, 1.0)]
    else:
        w, v = ang.arcs
        arcs = [(float(wi), float(vi)) for wi, vi in zip(w, v) if vi > 0]
    total = 0.0
    for width, g in arcs:
        if weight_id == "clr1_entropy":
            def fc(t, g=g):
                pv = float(P(np.array(t))) * g
                if pv <= 0:
                    return 0.0
                return pv * np.logaddexp(0.0, math.log(pv) - 2 * t)

            def ft(side, s, g=g):
                lp = float(lt(side, np.array(s))) + math.log(g)
                if lp == -math.inf:
                    return 0.0
                t = side * math.exp(min(s, 700.0))
                return math.exp(lp + s) * float(np.logaddexp(0.0, lp - 2 * t))
        else:
            def fc(t, g=g):
                pv = float(P(np.array(t))) * g
                if pv <= 0:
                    return 0.0
                return math.exp((1 + a) * math.log(pv) + 2 * a * float(np.logaddexp(0.0, -t)))

            def ft(side, s, g=g):
                lp = float(lt(side, np.array(s))) + math.log(g)
                if lp == -math.inf:
                    return 0.0
                t = side * math.exp(min(s, 700.0))
                return math.exp((1 + a) * lp + 2 * a * float(np.logaddexp(0.0, -t)) + s)
        total += width * _integrate_t(fc, ft, potential, t_lo, t_hi, tol)
    return total


# -- bound right-hand sides ---------------------------------------------------

THEOREM_NORMS = {
    "clr-mag-1": ("clr1_log_weight", "clr1_entropy"),
    "clr-mag-2": ("clr2",),
    "clr-radial": ("L1_log_B1", "L1_halfline_Linf"),
    "clr-radial-integer": ("L1_log_R2", "L1_halfline_Linf"),
    "eq:bel": ("L1_halfline_Linf",),
    "weyl": ("weyl",),
}


@dataclass
class BoundReport:
    theorem_id: str
    components: dict
    rhs_value: float
    params: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {"theorem_id": self.theorem_id, "components": dict(self.components),
                "rhs_value": self.rhs_value, "params": dict(self.params), "notes": list(self.notes)}


def bound_rhs(theorem_id: str, potential: PotentialProfile, params: dict | None = None) -> BoundReport:
    """Evaluate the bracketed norm sum of a named bound (its constant is left symbolic)."""
    params = dict(params or {})
    if theorem_id not in THEOREM_NORMS:
        raise ValueError(f"unknown theorem id {theorem_id!r}")
    a = params.get("a")
    comps = {}
    for wid in THEOREM_NORMS[theorem_id]:
        try:
            comps[wid] = weighted_norm(potential, wid, a=a)
        except DivergenceError as exc:
            raise AdmissibilityError(f"{theorem_id}: norm {wid} is infinite for this potential ({exc})") from exc
    notes = ["rhs is reported modulo the theorem's unspecified constant"]
    if theorem_id == "clr-radial" and potential.angular is None:
        notes.append("radial potential: L1_halfline_Linf equals L1_R2 / (2 pi)")
    rhs = float(sum(comps.values()))
    if not math.isfinite(rhs) or rhs < 0:
        raise AdmissibilityError(f"{theorem_id}: right-hand side is not a finite nonnegative number")
    return BoundReport(theorem_id, comps, rhs, params, notes)
