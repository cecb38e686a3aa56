"""Radial magnetic fields, their flux profiles and the flux gauge.

A field is described by its radial profile ``B(r)``.  Everything downstream
(channel operators, Hardy weights, the flux assumption checker) consumes only
the cumulative flux

    Phi(r) = int_0^r B(t) t dt,

so each kind below provides an exact (or exactly integrated) flux.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, ResolutionError, SingularityError, ConvergenceError

# integer-flux classification tolerance
TAU_INT = 1e-9

KINDS = ("step", "piecewise", "sampled", "aharonov-bohm", "zero")


@dataclass(frozen=True)
class FieldProfile:
    """Immutable radial magnetic field.

    ``breaks`` holds the radii ``0 = r_0 < r_1 < ... < r_n`` and ``values`` the
    field on ``[r_{i-1}, r_i)`` (piecewise kinds) or the samples ``B(r_i)``
    (sampled kind).  ``flux`` is only used by the Aharonov-Bohm kind.
    """

    kind: str
    breaks: tuple = ()
    values: tuple = ()
    flux: float = 0.0
    _cum: tuple = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown field kind {self.kind!r}")
        if self.kind in ("step", "piecewise", "sampled"):
            r = np.asarray(self.breaks, dtype=float)
            b = np.asarray(self.values, dtype=float)
            if r.ndim != 1 or np.any(np.diff(r) <= 0) or r[0] < 0:
                raise ValueError("field breakpoints must be increasing and nonnegative")
            if self.kind == "sampled":
                if len(b) != len(r):
                    raise ValueError("sampled field needs one value per node")
                if not np.all(np.isfinite(b)):
                    raise ValueError("field samples must be finite")
                object.__setattr__(self, "_cum", tuple(_sampled_cumflux(r, b)))
            else:
                if r[0] != 0.0 or len(b) != len(r) - 1:
                    raise ValueError("piecewise field needs breaks starting at 0 and len(values) == len(breaks) - 1")
                cum = np.concatenate([[0.0], np.cumsum(b * (r[1:] ** 2 - r[:-1] ** 2) / 2)])
                object.__setattr__(self, "_cum", tuple(cum))

    # -- constructors -----------------------------------------------------
    @classmethod
    def step(cls, b0: float, radius: float) -> "FieldProfile":
        """Constant field ``b0`` on the disc of the given radius."""
        if radius <= 0:
            raise ValueError("radius must be positive")
        return cls("step", (0.0, float(radius)), (float(b0),))

    @classmethod
    def piecewise(cls, breaks, values) -> "FieldProfile":
        return cls("piecewise", tuple(float(x) for x in breaks), tuple(float(v) for v in values))

    @classmethod
    def sampled(cls, r, b) -> "FieldProfile":
        r = [float(x) for x in r]
        b = [float(x) for x in b]
        if r[0] > 0:
            r = [0.0] + r
            b = [b[0]] + b
        return cls("sampled", tuple(r), tuple(b))

    @classmethod
    def aharonov_bohm(cls, flux: float) -> "FieldProfile":
        return cls("aharonov-bohm", flux=float(flux))

    @classmethod
    def zero(cls) -> "FieldProfile":
        return cls("zero")

    @property
    def is_ab(self) -> bool:
        return self.kind == "aharonov-bohm"

    @property
    def support_radius(self) -> float:
        """Radius beyond which ``B`` vanishes (0 for zero and AB fields)."""
        if self.kind in ("zero", "aharonov-bohm"):
            return 0.0
        return float(self.breaks[-1])

    def describe(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == "step":
            out.update(b0=self.values[0], radius=self.breaks[1])
        elif self.kind in ("piecewise", "sampled"):
            out.update(breaks=list(self.breaks), values=list(self.values))
        elif self.kind == "aharonov-bohm":
            out.update(flux=self.flux)
        return out

    def field_at(self, r):
        """Pointwise field value (0 away from the origin for AB)."""
        r = np.asarray(r, dtype=float)
        if self.kind in ("zero", "aharonov-bohm"):
            return np.zeros_like(r)
        br = np.asarray(self.breaks)
        vals = np.asarray(self.values)
        if self.kind == "sampled":
            return np.interp(r, br, vals, right=0.0)
        idx = np.searchsorted(br, r, side="right") - 1
        out = np.where((idx >= 0) & (idx < len(vals)), vals[np.clip(idx, 0, len(vals) - 1)], 0.0)
        return out


def _sampled_cumflux(r, b):
    # exact integral of t*B(t) for the piecewise-linear interpolant of B
    h = np.diff(r)
    slope = np.diff(b) / h
    r0 = r[:-1]
    # int_{r0}^{r0+h} (b0 + s (t - r0)) t dt
    seg = b[:-1] * ((r0 + h) ** 2 - r0 ** 2) / 2 + slope * (h ** 3 / 3 + r0 * h ** 2 / 2)
    return np.concatenate([[0.0], np.cumsum(seg)])


def flux_at(field: FieldProfile, r):
    """Flux ``Phi(r) = (1/2pi) int_{|x|<=r} B dx`` through the disc of radius ``r``.

    Accepts scalars or arrays; ``r = inf`` returns the total flux.
    """
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0) or np.any(np.isnan(r_arr)):
        raise DomainError("flux_at needs r >= 0")
    kind = field.kind
    if kind == "zero":
        out = np.zeros_like(r_arr)
    elif kind == "aharonov-bohm":
        out = np.where(r_arr > 0, field.flux, 0.0)
    else:
        br = np.asarray(field.breaks)
        cum = np.asarray(field._cum)
        vals = np.asarray(field.values)
        rc = np.minimum(r_arr, br[-1])
        idx = np.clip(np.searchsorted(br, rc, side="right") - 1, 0, len(br) - 2)
        r0 = br[idx]
        if kind == "sampled":
            b0 = vals[idx]
            slope = (vals[idx + 1] - vals[idx]) / (br[idx + 1] - br[idx])
            d = rc - r0
            out = cum[idx] + b0 * (rc ** 2 - r0 ** 2) / 2 + slope * (d ** 3 / 3 + r0 * d ** 2 / 2)
        else:
            out = cum[idx] + vals[idx] * (rc ** 2 - r0 ** 2) / 2
    if np.ndim(r) == 0:
        return float(out)
    return out


def classify_flux(value: float, tol: float = TAU_INT) -> str:
    if abs(value) <= tol:
        return "zero"
    if abs(value - round(value)) <= tol:
        return "integer"
    return "non-integer"


def total_flux(field: FieldProfile, tol: float = TAU_INT):
    """Total flux and its classification in {'integer', 'non-integer', 'zero'}.

    Zero counts as an integer flux for every theorem that distinguishes the
    two cases; it is reported separately because it is the field-free limit.
    """
    if field.kind == "aharonov-bohm":
        value = field.flux
    elif field.kind == "zero":
        value = 0.0
    else:
        value = float(field._cum[-1])
        if field.kind == "sampled":
            # the interpolant is cut to zero after the last sample; a sizeable
            # last sample means the tail was not resolved
            r_last = field.breaks[-1]
            tail = abs(field.values[-1]) * r_last ** 2
            if tail > max(1e-6 * max(abs(value), 1.0), 1e-12):
                raise ConvergenceError(
                    f"sampled field has not decayed at r={r_last:g} (|B| r^2 = {tail:.3g}); extend the samples"
                )
    return value, classify_flux(value, tol)


def sup_abs_flux(field: FieldProfile) -> float:
    """``sup_r |Phi(r)|`` (exact: extrema sit at breakpoints or zeros of B)."""
    if field.kind == "zero":
        return 0.0
    if field.kind == "aharonov-bohm":
        return abs(field.flux)
    pts = list(field.breaks)
    if field.kind == "sampled":
        r = np.asarray(field.breaks)
        b = np.asarray(field.values)
        for i in range(len(r) - 1):
            if b[i] * b[i + 1] < 0:
                pts.append(r[i] - b[i] * (r[i + 1] - r[i]) / (b[i + 1] - b[i]))
    return float(np.max(np.abs(flux_at(field, np.asarray(pts)))))


def n0(field: FieldProfile) -> int:
    """Channel index beyond which ``(Phi(r)+m)^2 >= m^2/2`` for all r.

    ``|Phi + m| >= |m| - |Phi| >= |m|/sqrt(2)`` holds once
    ``|m| >= (2 + sqrt(2)) |Phi|``.
    """
    return int(math.ceil((2 + math.sqrt(2)) * sup_abs_flux(field) - 1e-12))


def gauge_a(field: FieldProfile, r):
    """Angular component ``a(r) = Phi(r)/r`` of the radial gauge."""
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0):
        raise DomainError("gauge_a needs r >= 0")
    if np.any(r_arr == 0):
        if field.is_ab and field.flux != 0:
            raise SingularityError("Aharonov-Bohm gauge is singular at r = 0")
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(r_arr > 0, flux_at(field, r_arr) / np.where(r_arr > 0, r_arr, 1.0), 0.0)
    if np.ndim(r) == 0:
        return float(out)
    return out


@dataclass
class AssumptionReport:
    epsilon: float
    intervals: list
    satisfied: bool
    witness: str | None
    total_flux: float
    constant_per_interval: list
    constant_global: float | None
    grid_spacing: float

    def as_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "intervals": [[a, b] for a, b in self.intervals],
            "satisfied": self.satisfied,
            "witness": self.witness,
            "total_flux": self.total_flux,
            "constant_per_interval": self.constant_per_interval,
            "constant_global": self.constant_global,
        }


def _near_integer_gap(field, r, eps):
    phi = flux_at(field, r)
    return np.abs(phi - np.round(phi)) - eps


def check_flux_assumption(field: FieldProfile, eps: float, r_max: float = 100.0, grid=4001) -> AssumptionReport:
    """Locate ``{r : min_k |k - Phi(r)| < eps}`` on ``(0, r_max]`` and test the
    interval-length condition.

    ``grid`` is either a node count (uniform on ``[0, r_max]``) or an explicit
    increasing array of radii.  Interval ends are polished with Brent's method.
    The length constant ``A`` is reported under both readings: per interval
    (each ``|I_j|`` against its own neighbours) and against the global minimum
    over all ``j``.
    """
    if not 0 < eps < 0.5:
        raise ValueError("epsilon must lie in (0, 1/2)")
    if np.isscalar(grid):
        rg = np.linspace(0.0, r_max, int(grid))
    else:
        rg = np.asarray(grid, dtype=float)
    spacing = float(np.max(np.diff(rg)))
    phi_tot, cls = total_flux(field)

    if field.is_ab:
        gap = abs(field.flux - round(field.flux)) - eps
        if gap >= 0:
            return AssumptionReport(eps, [], True, None, phi_tot, [], None, spacing)
        return AssumptionReport(eps, [(0.0, math.inf)], False,
                                "constant flux within eps of an integer on (0, inf)",
                                phi_tot, [], None, spacing)

    g = _near_integer_gap(field, rg, eps)
    inside = g < 0
    # Phi(0) = 0, so the origin always starts an interval
    inside[0] = True
    intervals = []
    start = 0.0
    for i in range(1, len(rg)):
        if inside[i] != inside[i - 1]:
            f = lambda x: float(_near_integer_gap(field, x, eps))
            try:
                x = brentq(f, rg[i - 1], rg[i], xtol=1e-14)
            except ValueError:
                x = 0.5 * (rg[i - 1] + rg[i])
            if inside[i]:
                start = x
            else:
                intervals.append((start, x))
    trailing = bool(inside[-1])
    if trailing:
        intervals.append((start, math.inf))

    for a, b in intervals:
        if b - a < 2 * spacing and b != math.inf and a > 0:
            raise ResolutionError(
                f"near-integer interval ({a:.4g}, {b:.4g}) spans fewer than two grid cells; "
                f"refine the grid below {0.5 * (b - a):.3g}"
            )

    witness = None
    satisfied = True
    if cls in ("integer", "zero") and trailing:
        satisfied = False
        witness = f"flux stays within eps of {round(phi_tot)} on ({intervals[-1][0]:.6g}, inf)"
    elif trailing:
        # non-integer total flux but still near-integer at r_max: the scan is too short
        raise ResolutionError(f"flux is still within eps of an integer at r_max={r_max:g}; increase r_max")

    per, glob = [], None
    finite = [iv for iv in intervals if iv[1] != math.inf]
    if satisfied and finite:
        mins = []
        for j, (a, b) in enumerate(finite):
            terms = [1 + a]
            if j > 0:
                terms.append(a - finite[j - 1][1])
            if j + 1 < len(finite):
                terms.append(finite[j + 1][0] - b)
            mins.append(min(terms))
        lengths = [b - a for a, b in finite]
        per = [L / m for L, m in zip(lengths, mins)]
        glob = max(lengths) / min(mins)
    return AssumptionReport(eps, intervals, satisfied, witness, phi_tot, per, glob, spacing)
