"""Negative-eigenvalue counting for half-line problems and radial operators.

Two independent counters are provided:

* :func:`count_negative_shooting` integrates the zero-energy solution with
  ``q`` frozen per cell (exact propagation in each cell) and counts its
  zeros (Sturm oscillation), finishing with the Pruefer angle at the right
  end;
* :func:`count_negative_inertia` assembles the lumped finite-element
  (three-point) matrix of the same problem and counts negative pivots.

Both are exact integers for their discrete problems and converge to the same
count as the grid is refined.  :func:`count_total` sums channels and drives
grid and domain refinement.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
import math
import time

import numpy as np

from . import _kernels
from .channels import (BC, HalfLineProblem, ChannelProblem, build_channel, channel_cutoff, channel_halfline,
                       junction_gamma, junction_matrix, problem_grid, radial_jet, R_MIN, R_MAX, N_BASE,
                       VARIABLE_ALIASES)
from .errors import ConvergenceError, PreconditionError, ResolutionError
from .field import FieldProfile
from .potential import PotentialProfile

TIE_TOL = 1e-9


# -- discretization -----------------------------------------------------------

@dataclass
class Discretization:
    nodes: list            # node arrays per segment
    h: np.ndarray          # all cell widths, segment after segment
    q: np.ndarray          # cell-midpoint potentials
    jcell: np.ndarray      # last cell index of each non-final segment
    jmat: np.ndarray       # junction maps, one row (a, b, c, d) per junction

    @property
    def n_cells(self):
        return int(self.h.shape[0])


def discretize(problem: HalfLineProblem, factor: float = 1.0, energy: float = 0.0, nodes=None) -> Discretization:
    nodes = nodes if nodes is not None else problem_grid(problem, factor)
    hs, qs, jcell, jmat = [], [], [], []
    ncell = 0
    for k, (seg, x) in enumerate(zip(problem.segments, nodes)):
        h = np.diff(x)
        mid = 0.5 * (x[1:] + x[:-1])
        hs.append(h)
        qs.append(seg.q(mid) - energy)
        ncell += len(h)
        if k + 1 < len(problem.segments):
            nxt = problem.segments[k + 1]
            jcell.append(ncell - 1)
            jmat.append(junction_matrix(seg.var, seg.hi, nxt.var, nxt.lo).ravel())
    return Discretization(list(nodes), np.concatenate(hs), np.concatenate(qs),
                          np.asarray(jcell, dtype=np.int64),
                          np.asarray(jmat, dtype=float).reshape(-1, 4))


# -- shooting -----------------------------------------------------------------

@dataclass
class ShootResult:
    count: int
    zeros: int
    residue: float
    target: float
    margin: float
    n_cells: int


def _shoot_disc(problem: HalfLineProblem, disc: Discretization) -> ShootResult:
    left, right = problem.left, problem.right
    if left.is_dirichlet:
        u0, p0 = 0.0, 1.0
    else:
        u0, p0 = 1.0, left.h
    zeros, u, p = _kernels.prufer_sweep(disc.h, disc.q, disc.jcell, disc.jmat, u0, p0)
    if zeros < 0:
        raise ResolutionError("shooting state degenerated; the grid does not resolve q")
    res = math.atan2(u, p)
    if res < 0:
        res += math.pi
    if res >= math.pi:
        res -= math.pi
    if right.is_dirichlet:
        beta = math.pi
        margin = min(res, math.pi - res)
        if res < TIE_TOL and zeros > 0:
            # the solution vanishes at the right end: zero energy is an eigenvalue, not counted
            zeros -= 1
            res = math.pi
    else:
        beta = math.atan2(1.0, right.h)
        margin = abs(res - beta)
    count = zeros + (1 if res > beta else 0)
    return ShootResult(count, zeros, res, beta, margin, disc.n_cells)


def shoot(problem: HalfLineProblem, factor: float = 1.0, energy: float = 0.0) -> ShootResult:
    """Single shooting pass at a fixed grid factor (retries once on a phase tie)."""
    r = _shoot_disc(problem, discretize(problem, factor, energy))
    if r.margin < TIE_TOL:
        r2 = _shoot_disc(problem, discretize(problem, factor * 1.5, energy))
        if r2.margin >= r.margin:
            r = r2
    return r


# -- inertia ------------------------------------------------------------------

@dataclass
class InertiaResult:
    count: int
    zero_pivots: int
    size: int


def assemble_tridiagonal(problem: HalfLineProblem, disc: Discretization):
    """Symmetric tridiagonal ``(d, e)`` of the lumped P1 form of the problem.

    Unknowns are nodal values in each segment's own variable, with the
    junction value shared through ``u_r = sqrt(R') w``.
    """
    segs = problem.segments
    diags, offs = [], []
    h_all, q_all = disc.h, disc.q
    pos = 0
    carry = None  # (diag contribution, ) of the shared junction node from the left segment
    for k, (seg, x) in enumerate(zip(segs, disc.nodes)):
        nc = len(x) - 1
        h = h_all[pos:pos + nc]
        q = q_all[pos:pos + nc]
        pos += nc
        inv = 1.0 / h
        half = 0.5 * h * q
        d = np.zeros(nc + 1)
        d[:-1] += inv + half
        d[1:] += inv + half
        e = -inv.copy()
        if k == 0 and not problem.left.is_dirichlet:
            d[0] += problem.left.h
        if k == len(segs) - 1 and not problem.right.is_dirichlet:
            d[-1] -= problem.right.h
        if k > 0:
            prev = segs[k - 1]
            sl = 1.0 / math.sqrt(radial_jet(prev.var, prev.hi)[1])
            sr = 1.0 / math.sqrt(radial_jet(seg.var, seg.lo)[1])
            dl, el_last = carry
            dj = dl * sl * sl + d[0] * sr * sr + junction_gamma(prev.var, prev.hi) - junction_gamma(seg.var, seg.lo)
            offs[-1][-1] = el_last * sl
            d[0] = dj
            e[0] = e[0] * sr
        if k + 1 < len(segs):
            carry = (d[-1], e[-1])
            diags.append(d[:-1])
            offs.append(e)
        else:
            diags.append(d)
            offs.append(e)
    d = np.concatenate(diags)
    e = np.concatenate(offs)
    if problem.left.is_dirichlet:
        d, e = d[1:], e[1:]
    if problem.right.is_dirichlet:
        d, e = d[:-1], e[:-1]
    return d, e


def inertia(problem: HalfLineProblem, factor: float = 1.0, energy: float = 0.0) -> InertiaResult:
    """Single inertia pass at a fixed grid factor."""
    disc = discretize(problem, factor, energy)
    d, e = assemble_tridiagonal(problem, disc)
    c, zp = _kernels.tridiag_negcount(d, e, 0.0)
    if zp:
        # shifted restart: a tiny negative shift of the spectrum breaks the tie
        scale = float(np.max(np.abs(d))) if len(d) else 1.0
        c, zp2 = _kernels.tridiag_negcount(d, e, -1e-13 * scale)
    return InertiaResult(int(c), int(zp), len(d))


# -- grid refinement ----------------------------------------------------------

@dataclass
class GridStudy:
    count: int
    converged: bool
    trail: list  # (factor, count)


def _inertia_eigenvalue(problem: HalfLineProblem, factor: float, k: int, energy: float) -> float:
    """``k``-th eigenvalue (1-based, relative to ``energy``) of the discrete problem, by bisection on inertia."""
    step = 1.0
    if k > inertia(problem, factor, energy).count:
        lo, hi = 0.0, step
        while inertia(problem, factor, energy + hi).count < k:
            lo, hi = hi, 2 * hi
    else:
        lo, hi = -step, 0.0
        while inertia(problem, factor, energy + lo).count >= k:
            lo, hi = 2 * lo, lo
    while hi - lo > 1e-12 * max(1.0, abs(lo), abs(hi)):
        mid = 0.5 * (lo + hi)
        if inertia(problem, factor, energy + mid).count >= k:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def _inertia_separated(problem: HalfLineProblem, f_coarse: float, f_fine: float, count: int,
                       energy: float) -> bool:
    """A-posteriori check for the three-point discretization.

    The eigenvalues adjacent to ``energy`` must lie farther from it than
    their change between the two grids; otherwise a discretization error of
    that size could still move one across and the stable count is not yet
    trustworthy.
    """
    for k in (count, count + 1):
        if k < 1:
            continue
        fine = _inertia_eigenvalue(problem, f_fine, k, energy)
        coarse = _inertia_eigenvalue(problem, f_coarse, k, energy)
        if abs(fine) <= abs(fine - coarse):
            return False
    return True


def grid_converged(problem: HalfLineProblem, method: str = "shooting", factor0: float = 1.0,
                   max_doublings: int = 6, need: int = 3, energy: float = 0.0) -> GridStudy:
    """Double the grid density until ``need`` consecutive counts agree.

    For the inertia oracle the stable count must also pass
    :func:`_inertia_separated` on the last two grids.
    """
    solve = shoot if method == "shooting" else inertia
    trail = []
    f = factor0
    for _ in range(max_doublings + 1):
        c = solve(problem, f, energy).count
        trail.append((f, c))
        if len(trail) >= need and len({cc for _, cc in trail[-need:]}) == 1:
            if method == "shooting" or _inertia_separated(problem, trail[-2][0], f, c, energy):
                return GridStudy(c, True, trail)
        f *= 2.0
    return GridStudy(trail[-1][1], False, trail)


def count_negative_shooting(problem: HalfLineProblem, energy: float = 0.0, factor: float | None = None,
                            **kw) -> int:
    """Number of eigenvalues below ``energy`` by oscillation counting.

    With ``factor`` given, one pass on that grid; otherwise the grid is
    doubled until three consecutive counts agree.
    """
    if factor is not None:
        return shoot(problem, factor, energy).count
    st = grid_converged(problem, "shooting", energy=energy, **kw)
    return st.count


def count_negative_inertia(problem: HalfLineProblem, energy: float = 0.0, factor: float | None = None,
                           **kw) -> int:
    """Number of negative eigenvalues of the three-point discretization (Sylvester inertia)."""
    if factor is not None:
        return inertia(problem, factor, energy).count
    return grid_converged(problem, "inertia", energy=energy, **kw).count


# -- channel and total counts -------------------------------------------------

@dataclass
class CountOptions:
    variable: str = "auto"
    r_min: float = R_MIN
    r_max: float = R_MAX
    n_base: int = N_BASE
    level0: int = 0
    max_level: int = 6
    fixed_level: int | None = None     # evaluate at one domain level, Dirichlet ends, no growth
    max_doublings: int = 6
    need: int = 3
    bracket: bool = True
    method: str = "shooting"
    workers: int = 1
    budget: float | None = None        # seconds
    channels: tuple | None = None      # explicit channel override

    def replace(self, **kw):
        d = asdict(self)
        d.update(kw)
        return CountOptions(**d)


@dataclass
class ChannelCount:
    m: int
    count: int
    converged: bool
    level: int
    lower: int
    upper: int | None
    trail: list = field(default_factory=list)


def _nonneg_certificate(channel: ChannelProblem) -> bool:
    """``q_t >= 0`` on a dense probe set: the channel has no negative spectrum."""
    qt = channel.qfunc("t")
    ts = np.concatenate([np.linspace(-60.0, 60.0, 24001), -np.geomspace(60, 1e12, 3000),
                         np.geomspace(60, 1e12, 3000)])
    brk = np.asarray(channel.breaks_t())
    ts = np.concatenate([ts, brk - 1e-9, brk + 1e-9])
    with np.errstate(all="ignore"):
        v = np.nan_to_num(np.asarray(qt(ts), dtype=float), nan=0.0)
    return bool(np.min(v) >= 0)


def count_channel(channel: ChannelProblem, opts: CountOptions | None = None, deadline=None) -> ChannelCount:
    """Count one channel under the domain policy.

    Dirichlet truncation is a lower bound that grows with the domain; when
    ``q >= 0`` beyond both ends, the natural (Neumann) truncation is an
    upper bound and equality of the two certifies the count.  Otherwise the
    Dirichlet count must be unchanged over two consecutive domain doublings.
    """
    opts = opts or CountOptions()
    if _nonneg_certificate(channel):
        return ChannelCount(channel.m, 0, True, 0, 0, 0, [("nonneg", 0)])
    variable = VARIABLE_ALIASES.get(opts.variable, opts.variable)
    kw = dict(max_doublings=opts.max_doublings, need=opts.need)
    trail = []
    if opts.fixed_level is not None:
        p = channel_halfline(channel, variable, opts.fixed_level, opts.r_min, opts.r_max, "dirichlet", opts.n_base)
        st = grid_converged(p, opts.method, **kw)
        trail.append((opts.fixed_level, st.trail[-1][0], st.count, None))
        return ChannelCount(channel.m, st.count, st.converged, opts.fixed_level, st.count, None, trail)
    lows = []
    last = None
    for level in range(opts.level0, opts.max_level + 1):
        pD = channel_halfline(channel, variable, level, opts.r_min, opts.r_max, "dirichlet", opts.n_base)
        sD = grid_converged(pD, opts.method, **kw)
        nN = None
        okN = True
        if opts.bracket and all(pD.exterior_nonneg):
            pN = pD.with_bcs(BC.neumann(), BC.neumann())
            sN = grid_converged(pN, opts.method, **kw)
            nN, okN = sN.count, sN.converged
        trail.append((level, sD.trail[-1][0], sD.count, nN))
        lows.append(sD.count)
        last = ChannelCount(channel.m, sD.count, False, level, sD.count, nN, trail)
        if nN is not None and nN == sD.count and sD.converged and okN:
            last.converged = True
            return last
        if nN is None and len(lows) >= 3 and len(set(lows[-3:])) == 1 and sD.converged:
            last.converged = True
            return last
        if deadline is not None and time.monotonic() > deadline:
            break
    return last


@dataclass
class CountReport:
    per_channel: dict
    total: int
    cutoff: int
    converged: bool
    lam: float
    trail: list = field(default_factory=list)
    details: dict = field(default_factory=dict)

    def as_dict(self):
        return {"lam": self.lam, "total": self.total, "cutoff": self.cutoff, "converged": self.converged,
                "per_channel": {str(k): v for k, v in sorted(self.per_channel.items())},
                "trail": [list(map(_jsonable, t)) for t in self.trail]}


def _jsonable(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    return x


def _channel_key(field: FieldProfile, m: int):
    """Channels with identical data share a key (``m`` and ``-m`` when ``B = 0``)."""
    if field.kind == "zero":
        return abs(m)
    if field.kind == "aharonov-bohm":
        return round(abs(field.flux + m), 12)
    return m


def count_total(field: FieldProfile, potential: PotentialProfile, lam: float, opts: CountOptions | None = None,
                shift=None) -> CountReport:
    """``N(H_B + shift - lam V, 0)`` summed over channels ``|m| <= M``."""
    opts = opts or CountOptions()
    if lam < 0:
        raise PreconditionError("coupling must be nonnegative")
    deadline = time.monotonic() + opts.budget if opts.budget else None
    if opts.channels is not None:
        ms = list(opts.channels)
        M = max(abs(m) for m in ms) if ms else 0
    else:
        M = channel_cutoff(field, potential, lam)
        ms = list(range(-M, M + 1))
    per, trail, details = {}, [], {}
    if lam == 0 and shift is None:
        return CountReport({m: 0 for m in ms}, 0, M, True, lam, [], {})
    keys = {}
    for m in ms:
        keys.setdefault(_channel_key(field, m), []).append(m)
    reps = [grp[0] for grp in keys.values()]

    def work(m):
        ch = build_channel(field, potential, m, lam, shift)
        return m, count_channel(ch, opts, deadline)

    if opts.workers > 1:
        with ThreadPoolExecutor(opts.workers) as ex:
            results = list(ex.map(work, reps))
    else:
        results = [work(m) for m in reps]
    conv = True
    for m, cc in results:
        for mm in keys[_channel_key(field, m)]:
            per[mm] = cc.count
            details[mm] = cc
        conv = conv and cc.converged
        for lvl, fac, nD, nN in cc.trail if cc.trail and cc.trail[0][0] != "nonneg" else []:
            trail.append((m, lvl, fac, nD, nN))
    total = int(sum(per.values()))
    return CountReport(per, total, M, conv, lam, trail, details)


# -- scans, fits, thresholds --------------------------------------------------

@dataclass
class ScanResult:
    lams: list
    totals: list
    per_channel: list
    converged: list
    fit: dict | None = None

    def ratios(self):
        return [n / l if l > 0 else 0.0 for n, l in zip(self.totals, self.lams)]

    def as_dict(self):
        return {"lams": list(self.lams), "totals": list(self.totals), "n_over_lam": self.ratios(),
                "converged": list(self.converged), "fit": self.fit}


def scan_coupling(field: FieldProfile, potential: PotentialProfile, lams, opts: CountOptions | None = None,
                  shift=None) -> ScanResult:
    lams = [float(x) for x in lams]
    if any(b <= a for a, b in zip(lams[:-1], lams[1:])):
        raise PreconditionError("coupling ladder must be increasing")
    reports = [count_total(field, potential, lam, opts, shift) for lam in lams]
    return ScanResult(lams, [r.total for r in reports], [dict(r.per_channel) for r in reports],
                      [r.converged for r in reports])


def fit_exponent(scan, window=None, min_count: int = 10):
    """Least-squares fit ``log N = sigma log lam + log c`` over the window.

    ``scan`` is a :class:`ScanResult` or a pair ``(lams, totals)``.  Points
    with ``N < min_count`` are discarded.  Returns ``(sigma, c, residual)``.
    """
    lams, totals = (scan.lams, scan.totals) if isinstance(scan, ScanResult) else scan
    lams = np.asarray(lams, dtype=float)
    totals = np.asarray(totals, dtype=float)
    sel = np.ones(len(lams), dtype=bool)
    if window is not None:
        sel &= (lams >= window[0]) & (lams <= window[1])
    if np.any(totals[sel] <= 0):
        raise PreconditionError("zero counts inside the fit window")
    sel &= totals >= min_count
    if sel.sum() < 2:
        raise PreconditionError("fewer than two usable ladder points")
    x, y = np.log(lams[sel]), np.log(totals[sel])
    A = np.vstack([x, np.ones_like(x)]).T
    (sig, icpt), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = float(np.sqrt(np.mean((y - (sig * x + icpt)) ** 2)))
    if isinstance(scan, ScanResult):
        scan.fit = {"sigma": float(sig), "c": float(np.exp(icpt)), "residual": resid,
                    "window": [float(lams[sel][0]), float(lams[sel][-1])]}
    return float(sig), float(np.exp(icpt)), resid


@dataclass
class ThresholdResult:
    lam_star: float
    bracket: tuple
    trail: list
    level: int | None


def weak_coupling_threshold(field: FieldProfile, potential: PotentialProfile, lam_hi: float,
                            opts: CountOptions | None = None, rel: float = 1e-3, lam_floor: float | None = None,
                            level: int | None = None) -> ThresholdResult:
    """``inf {lam : N(lam) >= 1}`` by bisection to relative width ``rel``.

    With ``level`` set, every count uses that fixed Dirichlet domain, which
    gives an upper bound on the threshold that decreases as the domain grows.
    ``lam_star = 0`` is reported when ``N >= 1`` persists down to ``lam_floor``.
    """
    opts = opts or CountOptions()
    if level is not None:
        opts = opts.replace(fixed_level=level)
    lam_floor = lam_floor if lam_floor is not None else lam_hi * 1e-6
    trail = []

    def N(lam):
        n = count_total(field, potential, lam, opts).total
        trail.append((lam, n))
        return n

    if N(lam_hi) < 1:
        raise PreconditionError(f"N({lam_hi}) = 0; raise lam_hi")
    hi = lam_hi
    lo = lam_hi / 2
    while N(lo) >= 1:
        hi = lo
        lo /= 2
        if lo < lam_floor:
            return ThresholdResult(0.0, (0.0, hi), trail, level)
    while (hi - lo) > rel * hi:
        mid = 0.5 * (lo + hi)
        if N(mid) >= 1:
            hi = mid
        else:
            lo = mid
    srt = sorted(trail)
    for (l1, n1), (l2, n2) in zip(srt[:-1], srt[1:]):
        if n2 < n1:
            raise ConvergenceError(f"non-monotone counts in threshold search: {srt}")
    return ThresholdResult(hi, (lo, hi), trail, level)
