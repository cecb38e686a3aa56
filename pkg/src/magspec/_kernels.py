"""Compiled inner loops: Pruefer sweep and tridiagonal inertia."""
import math

import numpy as np
from numba import njit


@njit(cache=True)
def prufer_sweep(h, q, jcell, jmat, u0, p0):
    """Propagate ``-u'' + q u = 0`` across cells with constant ``q``.

    ``h[i]``, ``q[i]``: width and (midpoint) potential of cell ``i``.  After
    cell ``jcell[k]`` the state is mapped by the 2x2 matrix ``jmat[k]`` (a
    change of variable at a junction).  Returns the number of zeros of ``u``
    in the half-open domain ``(x_0, x_N]`` and the final normalized state.
    The state is rescaled by positive factors only, so signs are preserved.
    """
    n = h.shape[0]
    zeros = 0
    u = u0
    p = p0
    jk = 0
    nj = jcell.shape[0]
    for i in range(n):
        hi = h[i]
        qi = q[i]
        if qi < 0.0:
            k = math.sqrt(-qi)
            th = math.atan2(k * u, p)
            if th < 0.0:
                th += math.pi
            if th >= math.pi:
                th -= math.pi
            te = th + k * hi
            zeros += int(math.floor(te / math.pi))
            u = math.sin(te)
            p = k * math.cos(te)
        else:
            if qi == 0.0:
                u1 = u + p * hi
                p1 = p
            else:
                kap = math.sqrt(qi)
                tt = math.tanh(kap * hi)
                u1 = u + p * tt / kap
                p1 = u * kap * tt + p
            if u != 0.0 and (u1 == 0.0 or (u1 > 0.0) != (u > 0.0)):
                zeros += 1
            u = u1
            p = p1
        nrm = math.sqrt(u * u + p * p)
        if nrm == 0.0 or not math.isfinite(nrm):
            # degenerate state; the caller treats this as a resolution failure
            return -1, u, p
        u /= nrm
        p /= nrm
        while jk < nj and jcell[jk] == i:
            a = jmat[jk, 0] * u + jmat[jk, 1] * p
            b = jmat[jk, 2] * u + jmat[jk, 3] * p
            u = a
            p = b
            jk += 1
    return zeros, u, p


@njit(cache=True)
def tridiag_negcount(d, e, shift):
    """Number of negative eigenvalues of the symmetric tridiagonal matrix
    ``T - shift*I`` (diagonal ``d``, off-diagonal ``e``) by LDL^T pivots.

    Returns ``(count, zero_pivots)``; exact zero pivots are replaced by a
    tiny negative-free perturbation and counted so the caller can flag them.
    """
    n = d.shape[0]
    count = 0
    zp = 0
    piv = 1.0
    tiny = 1e-300
    for i in range(n):
        if i == 0:
            piv = d[0] - shift
        else:
            piv = d[i] - shift - e[i - 1] * e[i - 1] / piv
        if piv == 0.0:
            zp += 1
            piv = tiny
        if piv < 0.0:
            count += 1
    return count, zp


@njit(cache=True)
def tridiag_negcount_pencil(kd, ke, wd, we, mu):
    """Negative-pivot count of the pencil ``K - mu W`` (both tridiagonal)."""
    n = kd.shape[0]
    count = 0
    zp = 0
    piv = 1.0
    for i in range(n):
        di = kd[i] - mu * wd[i]
        if i == 0:
            piv = di
        else:
            ei = ke[i - 1] - mu * we[i - 1]
            piv = di - ei * ei / piv
        if piv == 0.0:
            zp += 1
            piv = 1e-300
        if piv < 0.0:
            count += 1
    return count, zp
