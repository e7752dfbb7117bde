"""Pure-Python twins of the compiled kernels in ``_kernels.pyx``.

The arithmetic mirrors the compiled code operation for operation. Scalar
loops use Python floats (IEEE doubles), elementwise work uses numpy with the
same expression trees, and running sums use sequential accumulation, so the
two backends return identical bits.
"""

from __future__ import annotations

import math

import numpy as np


def solve_shift(mu, tol: float = 1e-12, max_iter: int = 200):
    """Solve ``sum_i (mu_i + s)^-2 = 1`` for ``s`` in ``[1, sqrt(n)]``."""
    vals = [float(t) for t in mu]
    n = len(vals)

    def h_of(s):
        h = 0.0
        for mu_i in vals:
            t = mu_i + s
            h += 1.0 / (t * t)
        return h

    lo = 1.0
    hi = math.sqrt(float(n))
    if abs(h_of(lo) - 1.0) <= tol:
        return lo, 0, True
    if abs(h_of(hi) - 1.0) <= tol:
        return hi, 0, True

    mid = lo
    it = 0
    converged = False
    while it < max_iter:
        it += 1
        mid = 0.5 * (lo + hi)
        val = h_of(mid) - 1.0
        if abs(val) <= tol:
            converged = True
            break
        if val > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 4.440892098500626e-16 * hi:
            converged = True
            mid = 0.5 * (lo + hi)
            break
    if not converged:
        return mid, it, False

    h = 0.0
    d = 0.0
    for mu_i in vals:
        t = mu_i + mid
        h += 1.0 / (t * t)
        d += 2.0 / (t * t * t)
    s_new = mid + (h - 1.0) / d
    if s_new >= 1.0:
        if abs(h_of(s_new) - 1.0) < abs(h - 1.0):
            mid = s_new
    return mid, it, True


def swap_masses(ah, x, in_s, two_alpha, inv_k, removal, addition):
    """Fill the removal and addition masses in place; return both totals."""
    member = in_s.astype(bool)
    g = two_alpha * ah
    removal[:] = np.where(member & (g < 0.5), inv_k * (1.0 - x) * (1.0 - g), 0.0)
    addition[:] = np.where(member, 0.0, inv_k * x * (1.0 + g))
    rtot = float(np.cumsum(removal)[-1]) if removal.size else 0.0
    atot = float(np.cumsum(addition)[-1]) if addition.size else 0.0
    return rtot, atot


def inverse_cdf(masses, u):
    """Return the first index whose running mass exceeds ``u``, or -1."""
    if masses.size == 0:
        return -1
    cum = np.cumsum(masses)
    idx = int(np.searchsorted(cum, u, side="right"))
    return idx if idx < masses.size else -1


def edge_scores(b, c, us, vs, taken, base, m, out):
    """Score every edge for the greedy sparsifier; taken edges get -inf."""
    qb = b[us, us] + b[vs, vs] - 2.0 * b[us, vs]
    qc = c[us, us] + c[vs, vs] + 2.0 * c[us, vs]
    out[:] = np.where(taken.astype(bool), -np.inf, base - m * (qb + qc))
