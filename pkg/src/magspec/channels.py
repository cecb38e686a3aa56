"""Angular-momentum channels and their half-line Sturm-Liouville forms.

Channel ``m`` of a radial field carries the form

    int ( |f'|^2 + (Phi(r) + m)^2 / r^2 |f|^2 + (shift - lam V_hat) |f|^2 ) r dr.

With ``u = sqrt(r) f`` it becomes ``-u'' + q_r u`` on the half-line, and the
log variables remove the critical ``1/r^2`` scale:

* ``t = log r``:        ``q_t = (Phi + m)^2 + e^{2t} (shift - lam V_hat)(e^t)``
* ``s = log t``:        ``q_s = 1/4 + e^{2s} q_t(e^s)``     (large radii)
* ``si = -log(-t)``:    ``q_si = 1/4 + e^{-2 si} q_t(-e^{-si})``  (small radii)

Each variable ``y`` is tied to ``r`` through ``r = R(y)`` and the amplitude
``u_r = sqrt(R'(y)) w(y)``.  A problem may be a chain of segments in
different variables glued at ``r = e`` or ``r = 1/e``; the glue is the exact
change of variables, so oscillation counts carry across.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
import math

import numpy as np

from . import field as fieldmod
from .field import FieldProfile, flux_at
from .potential import PotentialProfile, weight_profile
from .errors import ConvergenceError, DomainError

QCLIP = 1e200
VARIABLES = ("r", "t", "s", "si")

# defaults for the truncated domain
R_MIN = 1e-6
R_MAX = 1e3
N_BASE = 100


# -- variables ----------------------------------------------------------------

def var_to_t(var, y):
    """``t = log r`` as a function of the variable ``y``."""
    y = np.asarray(y, dtype=float)
    with np.errstate(over="ignore", divide="ignore"):
        if var == "t":
            return y
        if var == "s":
            return np.exp(y)
        if var == "si":
            return -np.exp(-y)
        if var == "r":
            return np.log(y)
    raise ValueError(f"unknown variable {var!r}")


def t_to_var(var, t):
    t = float(t)
    if var == "t":
        return t
    if var == "s":
        if t <= 0:
            raise DomainError("s = log t needs t > 0")
        return math.log(t)
    if var == "si":
        if t >= 0:
            raise DomainError("si = -log(-t) needs t < 0")
        return -math.log(-t)
    if var == "r":
        return math.exp(t)
    raise ValueError(f"unknown variable {var!r}")


def radial_jet(var, y):
    """``(R, R', R'')`` of the map ``r = R(y)`` at a scalar ``y``."""
    if var == "r":
        return y, 1.0, 0.0
    if var == "t":
        e = math.exp(y)
        return e, e, e
    if var == "s":
        es = math.exp(y)
        R = math.exp(es)
        return R, R * es, R * es * (es + 1.0)
    if var == "si":
        em = math.exp(-y)
        R = math.exp(-em)
        return R, R * em, R * em * (em - 1.0)
    raise ValueError(f"unknown variable {var!r}")


def junction_gamma(var, y):
    """Boundary coefficient ``R''/(2 R'^2)`` produced by the amplitude change."""
    R, R1, R2 = radial_jet(var, y)
    return R2 / (2.0 * R1 * R1)


def junction_matrix(var_l, y_l, var_r, y_r):
    """2x2 map ``(w_l, w_l') -> (w_r, w_r')`` at a common radius."""
    _, a1, a2 = radial_jet(var_l, y_l)
    _, b1, b2 = radial_jet(var_r, y_r)
    to_u = np.array([[math.sqrt(a1), 0.0], [a2 / (2 * a1 ** 1.5), 1.0 / math.sqrt(a1)]])
    from_u = np.array([[1.0 / math.sqrt(b1), 0.0], [-b2 / (2 * b1 ** 1.5), math.sqrt(b1)]])
    return from_u @ to_u


# -- boundary conditions ------------------------------------------------------

@dataclass(frozen=True)
class BC:
    """``dirichlet`` (u = 0) or ``robin`` (u' = h u, Neumann when ``h = 0``)."""

    kind: str = "dirichlet"
    h: float = 0.0

    @classmethod
    def dirichlet(cls):
        return cls("dirichlet")

    @classmethod
    def neumann(cls):
        return cls("robin", 0.0)

    @classmethod
    def robin(cls, h):
        return cls("robin", float(h))

    @classmethod
    def weighted_neumann(cls, x):
        """``u' = u / (2x)``: the Neumann condition for ``f`` after ``u = sqrt(r) f``."""
        return cls("robin", 1.0 / (2.0 * x))

    @property
    def is_dirichlet(self):
        return self.kind == "dirichlet"


# -- half-line problems -------------------------------------------------------

@dataclass(frozen=True)
class Segment:
    var: str
    lo: float
    hi: float
    qfunc: object = field(repr=False, compare=False)
    breaks: tuple = ()

    def __post_init__(self):
        if not self.lo < self.hi:
            raise DomainError(f"segment needs lo < hi, got ({self.lo}, {self.hi})")
        if self.var not in VARIABLES:
            raise ValueError(f"unknown variable {self.var!r}")

    def q(self, y):
        y = np.asarray(y, dtype=float)
        with np.errstate(all="ignore"):
            out = np.asarray(self.qfunc(y), dtype=float)
        out = np.nan_to_num(out, nan=QCLIP, posinf=QCLIP, neginf=-QCLIP)
        return np.clip(out, -QCLIP, QCLIP)


@dataclass(frozen=True)
class HalfLineProblem:
    """``-w'' + q w`` on a chain of segments with end conditions in the end variables.

    A single-segment problem is the common case; ``variable``, ``domain`` and
    ``q`` then refer to that segment.
    """

    segments: tuple
    left: BC = BC()
    right: BC = BC()
    n_base: int = N_BASE
    label: str = ""
    exterior_nonneg: tuple = (False, False)

    def __post_init__(self):
        segs = self.segments
        for a, b in zip(segs[:-1], segs[1:]):
            ra = radial_jet(a.var, a.hi)[0]
            rb = radial_jet(b.var, b.lo)[0]
            if not math.isclose(ra, rb, rel_tol=1e-12):
                raise DomainError("chain segments must meet at a common radius")

    @property
    def variable(self):
        return self.segments[0].var if len(self.segments) == 1 else "+".join(s.var for s in self.segments)

    @property
    def domain(self):
        return (self.segments[0].lo, self.segments[-1].hi)

    def q(self, y):
        if len(self.segments) != 1:
            raise ValueError("q(y) is only defined for single-segment problems")
        return self.segments[0].q(y)

    def with_bcs(self, left=None, right=None):
        return replace(self, left=left or self.left, right=right or self.right)

    def shifted(self, energy):
        """Same problem with ``q - energy`` (counts below ``energy``)."""
        if energy == 0:
            return self
        if len(self.segments) != 1:
            raise ValueError("energy shifts are only meaningful in a single variable")
        s = self.segments[0]
        seg = Segment(s.var, s.lo, s.hi, lambda y, f=s.qfunc: f(y) - energy, s.breaks)
        return replace(self, segments=(seg,))


def simple_problem(qfunc, lo, hi, left=None, right=None, var="r", breaks=(), n_base=N_BASE, label=""):
    """Single-segment problem from a callable ``q``."""
    seg = Segment(var, float(lo), float(hi), qfunc, tuple(b for b in breaks if lo < b < hi))
    return HalfLineProblem((seg,), left or BC(), right or BC(), n_base, label)


def piecewise_q(breaks, values):
    """Callable for a piecewise-constant ``q`` with the given interior breakpoints."""
    br = np.asarray(breaks, dtype=float)
    vals = np.asarray(values, dtype=float)

    def q(y):
        idx = np.searchsorted(br, np.asarray(y, dtype=float), side="right")
        return vals[idx]
    return q


# -- grids --------------------------------------------------------------------

def segment_grid(seg: Segment, factor: float = 1.0, n_base: int = N_BASE):
    """Equidistributed nodes for one segment.

    The node density combines a floor ``n_base / L``, one node per radian
    of local oscillation ``sqrt(-q)`` and a variation term ``|q'|^{1/3}``
    (capped) that grades the mesh toward ``1/y^2``-type scales.  Breakpoints
    of ``q`` are always nodes.  ``factor`` multiplies the density.
    """
    lo, hi = seg.lo, seg.hi
    L = hi - lo
    frac = np.geomspace(1e-10, 0.5, 400)
    anchors = [lo + L * frac, hi - L * frac]
    for b in seg.breaks:
        anchors += [b + L * frac, b - L * frac]
    probes = np.concatenate([np.linspace(lo, hi, 2001), list(seg.breaks)] + anchors)
    probes = np.unique(np.clip(probes, lo, hi))
    mid = 0.5 * (probes[1:] + probes[:-1])
    qm = seg.q(mid)
    osc = np.sqrt(np.maximum(-qm, 0.0))
    qn = seg.q(probes)
    dy = np.diff(probes)
    dq = np.abs(np.diff(qn)) / dy
    # |q'|^{1/3} grades the mesh toward 1/y^2 scales; |q'/q| resolves slow
    # relative variation (both capped where q is astronomically large)
    var = np.minimum(np.cbrt(dq), 50.0)
    with np.errstate(over="ignore"):
        rel = np.minimum(4.0 * dq / (np.abs(qm) + 1e-300), 50.0)
    rel = np.where(np.abs(qm) > 1e6, 0.0, rel)
    dens = n_base / L + osc + var + rel
    cum = np.concatenate([[0.0], np.cumsum(dens * np.diff(probes))])
    n = max(int(math.ceil(factor * cum[-1])), 4)
    nodes = np.interp(np.linspace(0.0, cum[-1], n + 1), cum, probes)
    nodes = np.unique(np.concatenate([nodes, [lo, hi], list(seg.breaks)]))
    nodes = nodes[(nodes >= lo) & (nodes <= hi)]
    keep = np.concatenate([[True], np.diff(nodes) > 1e-14 * max(1.0, abs(hi), abs(lo))])
    nodes = nodes[keep]
    nodes[-1] = hi
    return nodes


def problem_grid(problem: HalfLineProblem, factor: float = 1.0):
    return [segment_grid(s, factor, problem.n_base) for s in problem.segments]


# -- channels -----------------------------------------------------------------

@dataclass(frozen=True)
class ChannelProblem:
    """Channel ``m`` of ``H_B + shift - lam V`` (all radial data)."""

    field: FieldProfile
    potential: PotentialProfile
    m: int
    lam: float
    shifts: tuple = ()   # ((coef, PotentialProfile), ...)

    def effective_centrifugal(self, r):
        r = np.asarray(r, dtype=float)
        return (flux_at(self.field, r) + self.m) ** 2 / (r * r)

    def amp(self, t):
        """``(Phi(e^t) + m)^2``."""
        return _amp(self.field, self.m, t)

    def qfunc(self, var):
        """``q`` in the given variable as a vectorized callable."""
        fld, m, lam, pot, shifts = self.field, self.m, self.lam, self.potential, self.shifts
        gm = pot.angular.mean if pot.angular is not None else 1.0
        sign_v = -lam * gm

        def q(y):
            y = np.asarray(y, dtype=float)
            with np.errstate(all="ignore"):
                t = var_to_t(var, y)
                A = _amp(fld, m, t)
                extra = sign_v * pot.vardensity(var, y) if lam != 0 and not pot.is_zero else 0.0
                for c, w in shifts:
                    extra = extra + c * w.vardensity(var, y)
                if var == "t":
                    return A + extra
                if var == "r":
                    return (A - 0.25) / (y * y) + extra
                jac2 = np.exp(2 * y) if var == "s" else np.exp(-2 * y)
                mag = np.where(A == 0.0, 0.0, jac2 * A)
                return 0.25 + mag + extra
        return q

    def breaks_t(self):
        out = []
        if self.field.kind in ("step", "piecewise", "sampled"):
            out += [math.log(b) for b in self.field.breaks if b > 0]
        if self.lam != 0:
            out += self.potential.breaks_t()
        for _, w in self.shifts:
            out += w.breaks_t()
        return sorted(set(out))


def _amp(fld, m, t):
    t = np.asarray(t, dtype=float)
    if fld.kind == "aharonov-bohm":
        return np.full_like(t, (fld.flux + m) ** 2)
    if fld.kind == "zero":
        return np.full_like(t, float(m * m))
    with np.errstate(over="ignore"):
        r = np.exp(t)
    return (flux_at(fld, r) + m) ** 2


def build_channel(field: FieldProfile, potential: PotentialProfile, m: int, lam: float, shift=None) -> ChannelProblem:
    """Assemble channel ``m``.  ``shift`` is ``None``, a weight id, a profile, or a list of
    ``(coef, profile-or-id)`` pairs."""
    return ChannelProblem(field, potential, int(m), float(lam), _normalize_shift(shift))


def _normalize_shift(shift):
    if shift is None:
        return ()
    if isinstance(shift, (str, PotentialProfile)):
        shift = [(1.0, shift)]
    out = []
    for c, w in shift:
        if isinstance(w, str):
            w = weight_profile(w)
        if c < 0:
            raise DomainError("shift weights must be nonnegative")
        out.append((float(c), w))
    return tuple(out)


def _breaks_in(var, breaks_t, lo, hi):
    out = []
    for bt in breaks_t:
        try:
            y = t_to_var(var, bt)
        except DomainError:
            continue
        if lo < y < hi:
            out.append(y)
    return tuple(sorted(out))


def _segment(ch, var, lo, hi):
    return Segment(var, lo, hi, ch.qfunc(var), _breaks_in(var, ch.breaks_t(), lo, hi))


def liouville_halfline(channel: ChannelProblem, r_min=R_MIN, r_max=R_MAX, left=None, right=None,
                       n_base=N_BASE) -> HalfLineProblem:
    """Half-line form in ``r``: ``-u'' + [((Phi+m)^2 - 1/4)/r^2 + shift - lam V_hat] u``."""
    if not 0 < r_min < r_max:
        raise DomainError("need 0 < r_min < r_max")
    seg = _segment(channel, "r", r_min, r_max)
    return HalfLineProblem((seg,), left or BC(), right or BC(), n_base, f"m={channel.m} r")


def log_transform(problem: HalfLineProblem, channel: ChannelProblem | None = None) -> HalfLineProblem:
    """Conjugate a single-segment problem one level: ``r -> t = log r`` or ``t -> s = log t``.

    ``q_new(y) = 1/4 + e^{2y} q_old(e^y)`` with ``w(y) = e^{-y/2} u(e^y)``.
    Robin coefficients map as ``h -> h x - 1/2``; Dirichlet is preserved.
    When the originating ``channel`` is supplied, ``q`` is rebuilt from it in
    closed form instead of composing floating-point maps.
    """
    if len(problem.segments) != 1:
        raise ValueError("log_transform acts on single-segment problems")
    seg = problem.segments[0]
    new_var = {"r": "t", "t": "s"}.get(seg.var)
    if new_var is None:
        raise ValueError(f"no log transform defined from variable {seg.var!r}")
    if seg.lo <= 0:
        raise DomainError("log transform needs a positive left end")
    lo, hi = math.log(seg.lo), math.log(seg.hi)
    if channel is not None:
        qf = channel.qfunc(new_var)
    else:
        old = seg.qfunc

        def qf(y):
            with np.errstate(over="ignore"):
                e = np.exp(np.asarray(y, dtype=float))
                return 0.25 + e * e * old(e)
    brk = tuple(math.log(b) for b in seg.breaks if b > 0)

    def map_bc(bc, x):
        return bc if bc.is_dirichlet else BC.robin(bc.h * x - 0.5)
    new = Segment(new_var, lo, hi, qf, tuple(b for b in brk if lo < b < hi))
    return replace(problem, segments=(new,), left=map_bc(problem.left, seg.lo),
                   right=map_bc(problem.right, seg.hi), label=problem.label + f"->{new_var}")


# -- domain selection ---------------------------------------------------------

def _last_negative(qf, start, direction, far):
    """Farthest probe (walking away from ``start``) where ``q < 0``, or ``None``."""
    offs = np.geomspace(1e-3, far, 6000)
    ys = start + direction * offs
    vals = np.asarray(qf(ys), dtype=float)
    neg = np.nonzero(vals < 0)[0]
    if len(neg) == 0:
        return None
    return float(ys[neg[-1]])


def _exterior_ok(qf, start, direction, far):
    offs = np.geomspace(1e-6, far, 4000)
    with np.errstate(all="ignore"):
        vals = np.asarray(qf(start + direction * offs), dtype=float)
    vals = np.nan_to_num(vals, nan=QCLIP)
    return bool(np.all(vals >= 0))


def auto_variable(channel: ChannelProblem) -> str:
    pot = channel.potential
    if channel.lam != 0 and pot.singularity_tag != "none":
        return "loglog-origin"
    if channel.lam != 0 and pot.decay_tag == "borderline":
        return "loglog"
    return "log"


def channel_halfline(channel: ChannelProblem, variable="auto", level=0, r_min=R_MIN, r_max=R_MAX,
                     bc="dirichlet", n_base=N_BASE) -> HalfLineProblem:
    """The channel as a (possibly chained) half-line problem ready for counting.

    ``level`` doubles the log-extent of the truncation in the end variables
    ``2**level`` times.  ``bc`` is ``dirichlet`` (lower bracket) or
    ``neumann`` (natural condition in the end variable; an upper bracket when
    ``q >= 0`` beyond the ends, recorded in ``exterior_nonneg``).
    """
    if variable == "auto":
        variable = auto_variable(channel)
    k = 2.0 ** level
    end_bc = BC.dirichlet() if bc == "dirichlet" else BC.neumann()
    if variable == "r":
        lo, hi = r_min / k, r_max * k
        seg = _segment(channel, "r", lo, hi)
        ext = (False, False)
        return HalfLineProblem((seg,), end_bc, end_bc, n_base, f"m={channel.m} r", ext)
    if variable == "log":
        qt = channel.qfunc("t")
        t_lo0, t_hi0 = math.log(r_min), math.log(r_max)
        neg_hi = _last_negative(qt, 0.0, +1, 1e4)
        neg_lo = _last_negative(qt, 0.0, -1, 1e4)
        if neg_hi is not None and neg_hi > 0:
            t_hi0 = max(t_hi0, 2 * neg_hi)
        if neg_lo is not None and neg_lo < 0:
            t_lo0 = min(t_lo0, 2 * neg_lo)
        lo, hi = t_lo0 * k, t_hi0 * k
        seg = _segment(channel, "t", lo, hi)
        ext = (_exterior_ok(qt, lo, -1, 1e5), _exterior_ok(qt, hi, +1, 1e5))
        return HalfLineProblem((seg,), end_bc, end_bc, n_base, f"m={channel.m} t", ext)
    if variable == "loglog":
        qt, qs = channel.qfunc("t"), channel.qfunc("s")
        t_lo0 = math.log(r_min)
        neg_lo = _last_negative(qt, 0.0, -1, 1e4)
        if neg_lo is not None and neg_lo < 0:
            t_lo0 = min(t_lo0, 2 * neg_lo)
        s_hi0 = math.log(math.log(r_max))
        neg = _last_negative(qs, 0.0, +1, 1e12)
        if neg is not None and neg > 0:
            s_hi0 = max(s_hi0, 2 * neg)
        lo, S = t_lo0 * k, s_hi0 * k
        segs = (_segment(channel, "t", lo, 1.0), _segment(channel, "s", 0.0, S))
        ext = (_exterior_ok(qt, lo, -1, 1e5), _exterior_ok(qs, S, +1, 1e12))
        return HalfLineProblem(segs, end_bc, end_bc, n_base, f"m={channel.m} t+s", ext)
    if variable == "loglog-origin":
        qt, qsi = channel.qfunc("t"), channel.qfunc("si")
        t_hi0 = math.log(r_max)
        neg_hi = _last_negative(qt, 0.0, +1, 1e4)
        if neg_hi is not None and neg_hi > 0:
            t_hi0 = max(t_hi0, 2 * neg_hi)
        s_lo0 = -math.log(-math.log(r_min))
        neg = _last_negative(qsi, 0.0, -1, 1e12)
        if neg is not None and neg < 0:
            s_lo0 = min(s_lo0, 2 * neg)
        lo, hi = s_lo0 * k, t_hi0 * k
        segs = (_segment(channel, "si", lo, 0.0), _segment(channel, "t", -1.0, hi))
        ext = (_exterior_ok(qsi, lo, -1, 1e12), _exterior_ok(qt, hi, +1, 1e5))
        return HalfLineProblem(segs, end_bc, end_bc, n_base, f"m={channel.m} si+t", ext)
    raise ValueError(f"unknown variable choice {variable!r}")


VARIABLE_ALIASES = {"auto": "auto", "r": "r", "log": "log", "t": "log", "loglog": "loglog", "s": "loglog",
                    "loglog-origin": "loglog-origin", "si": "loglog-origin"}


# -- channel cutoff -----------------------------------------------------------

def n0(field: FieldProfile) -> int:
    return fieldmod.n0(field)


def sup_tdensity(potential: PotentialProfile, t_range=(-60.0, 60.0)) -> float:
    """``sup_t r^2 V_hat`` on a dense probe set (1% safety margin applied by callers)."""
    if potential.is_zero:
        return 0.0
    lo, hi = potential.support_t()
    a, b = max(lo, t_range[0]), min(hi, t_range[1])
    ts = np.linspace(a, b, 200001)
    brk = np.asarray([x for x in potential.breaks_t() if a <= x <= b])
    ts = np.concatenate([ts, brk, brk - 1e-12, brk + 1e-12])
    vals = potential.tdensity(ts)
    gm = potential.angular.mean if potential.angular is not None else 1.0
    out = float(np.max(vals)) * gm
    if not math.isfinite(out):
        raise ConvergenceError("r^2 V_hat is unbounded on the truncated domain; cannot certify a cutoff")
    return out


def channel_cutoff(field: FieldProfile, potential: PotentialProfile, lam: float, t_range=(-60.0, 60.0)) -> int:
    """``M`` with every channel ``|m| > M`` nonnegative.

    For ``|m| > n0`` we have ``(Phi + m)^2 >= m^2 / 2``, so ``q_t >= m^2/2 - lam sup P``.
    """
    if not math.isfinite(lam) or lam < 0:
        raise DomainError("coupling must be finite and nonnegative")
    base = fieldmod.n0(field)
    if lam == 0:
        return base
    psup = sup_tdensity(potential, t_range) * 1.01
    return max(base, int(math.ceil(math.sqrt(2.0 * lam * psup) - 1e-9)))
