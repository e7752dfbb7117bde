# cython: language_level=3
"""Compiled hot loops for the swap iteration and the sparsifier scan.

Every routine here has a twin in ``_pykernels.py`` that performs the same
floating-point operations in the same order, so both backends produce
bit-identical results.
"""

from libc.math cimport sqrt, fabs


def solve_shift(double[::1] mu, double tol=1e-12, int max_iter=200):
    """Solve ``sum_i (mu_i + s)^-2 = 1`` for ``s`` in ``[1, sqrt(n)]``.

    ``mu`` holds the scaled eigenvalues shifted so the smallest is zero.
    Returns ``(s, iterations, converged)``.
    """
    cdef Py_ssize_t n = mu.shape[0]
    cdef Py_ssize_t i
    cdef double lo = 1.0
    cdef double hi = sqrt(<double>n)
    cdef double mid = lo, val, t, h, d, s_new, h_new
    cdef int it = 0
    cdef bint converged = False

    # h(lo) >= 1 >= h(hi); h is strictly decreasing.
    h = 0.0
    for i in range(n):
        t = mu[i] + lo
        h += 1.0 / (t * t)
    if fabs(h - 1.0) <= tol:
        return lo, 0, True
    h = 0.0
    for i in range(n):
        t = mu[i] + hi
        h += 1.0 / (t * t)
    if fabs(h - 1.0) <= tol:
        return hi, 0, True

    while it < max_iter:
        it += 1
        mid = 0.5 * (lo + hi)
        h = 0.0
        for i in range(n):
            t = mu[i] + mid
            h += 1.0 / (t * t)
        val = h - 1.0
        if fabs(val) <= tol:
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

    # One Newton polish step, kept only if it improves the residual.
    h = 0.0
    d = 0.0
    for i in range(n):
        t = mu[i] + mid
        h += 1.0 / (t * t)
        d += 2.0 / (t * t * t)
    s_new = mid + (h - 1.0) / d
    if s_new >= 1.0:
        h_new = 0.0
        for i in range(n):
            t = mu[i] + s_new
            h_new += 1.0 / (t * t)
        if fabs(h_new - 1.0) < fabs(h - 1.0):
            mid = s_new
    return mid, it, True


def swap_masses(
    double[::1] ah,
    double[::1] x,
    unsigned char[::1] in_s,
    double two_alpha,
    double inv_k,
    double[::1] removal,
    double[::1] addition,
):
    """Fill the removal and addition masses in place.

    Returns the two totals, accumulated in index order.
    """
    cdef Py_ssize_t m = ah.shape[0]
    cdef Py_ssize_t i
    cdef double g
    cdef double rtot = 0.0
    cdef double atot = 0.0
    for i in range(m):
        g = two_alpha * ah[i]
        if in_s[i]:
            addition[i] = 0.0
            if g < 0.5:
                removal[i] = inv_k * (1.0 - x[i]) * (1.0 - g)
            else:
                removal[i] = 0.0
        else:
            removal[i] = 0.0
            addition[i] = inv_k * x[i] * (1.0 + g)
        rtot += removal[i]
        atot += addition[i]
    return rtot, atot


def inverse_cdf(double[::1] masses, double u):
    """Return the first index whose running mass exceeds ``u``, or -1."""
    cdef Py_ssize_t m = masses.shape[0]
    cdef Py_ssize_t i
    cdef double acc = 0.0
    for i in range(m):
        acc += masses[i]
        if u < acc:
            return i
    return -1


def edge_scores(
    double[:, ::1] b,
    double[:, ::1] c,
    long[::1] us,
    long[::1] vs,
    unsigned char[::1] taken,
    double base,
    double m,
    double[::1] out,
):
    """Score every edge for the greedy sparsifier; taken edges get -inf."""
    cdef Py_ssize_t e, u, v
    cdef Py_ssize_t ne = us.shape[0]
    cdef double qb, qc
    for e in range(ne):
        if taken[e]:
            out[e] = -float("inf")
            continue
        u = us[e]
        v = vs[e]
        qb = b[u, u] + b[v, v] - 2.0 * b[u, v]
        qc = c[u, u] + c[v, v] + 2.0 * c[u, v]
        out[e] = base - m * (qb + qc)
