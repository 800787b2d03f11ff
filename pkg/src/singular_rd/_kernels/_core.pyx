# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled mirror of ``singular_rd._kernels.fallback``.

Same functions, same semantics; see the fallback module for the contracts.
The Thomas solves here are unpivoted, which is fine for the near-diagonally-
dominant systems the solver assembles (the fallback uses pivoted LAPACK).
"""

import numpy as np

from libc.math cimport fabs, pow, sqrt

from ..errors import LinearSolveFailure

name = "compiled"

cdef double _PIVOT_TINY = 1e-300


cdef inline double _powp(double x, double p) nogil:
    # nu = 1 dominates in practice; x*x and sqrt are much cheaper than pow
    if p == 2.0:
        return x * x
    return pow(x, p)


cdef inline double _rootp(double x, double p) nogil:
    if p == 2.0:
        return sqrt(x)
    return pow(x, 1.0 / p)


cdef int _thomas(double[::1] lo, double[::1] di, double[::1] up,
                 double[::1] rhs, double[::1] out, double[::1] cp,
                 Py_ssize_t n) nogil:
    cdef Py_ssize_t i
    cdef double denom = di[0]
    if fabs(denom) < _PIVOT_TINY:
        return -1
    cp[0] = up[0] / denom
    out[0] = rhs[0] / denom
    for i in range(1, n):
        denom = di[i] - lo[i] * cp[i - 1]
        if fabs(denom) < _PIVOT_TINY:
            return -1
        cp[i] = up[i] / denom
        out[i] = (rhs[i] - lo[i] * out[i - 1]) / denom
    for i in range(n - 2, -1, -1):
        out[i] = out[i] - cp[i] * out[i + 1]
    return 0


def solve_tridiagonal(double[::1] lo, double[::1] di, double[::1] up, double[::1] rhs):
    cdef Py_ssize_t n = di.shape[0]
    out_arr = np.empty(n)
    cp_arr = np.empty(n)
    cdef double[::1] out = out_arr
    cdef double[::1] cp = cp_arr
    if _thomas(lo, di, up, rhs, out, cp, n) != 0:
        raise LinearSolveFailure("singular tridiagonal system")
    return out_arr


cdef int _reaction(double[::1] values, double nu, double tau, double floor,
                   unsigned char[::1] frozen, bint lock_last) nogil:
    cdef Py_ssize_t n = values.shape[0]
    cdef Py_ssize_t stop = n - 1 if lock_last else n
    cdef double p = 1.0 + nu
    cdef double floor_pow = _powp(floor, p)
    cdef double upow, best_pow, bpow
    cdef Py_ssize_t i, newly = -1
    best_pow = 0.0
    if tau == 0.0:
        return -1  # exact identity
    for i in range(stop):
        if frozen[i]:
            continue
        upow = _powp(values[i], p) - p * tau
        if upow <= floor_pow:
            values[i] = floor
            frozen[i] = 1
            if newly < 0 or upow < best_pow:
                best_pow = upow
                newly = i
        else:
            values[i] = _rootp(upow, p)
    if lock_last and not frozen[n - 1]:
        bpow = _powp(values[n - 1], p) - p * tau
        values[n - 1] = floor if bpow <= floor_pow else _rootp(bpow, p)
    return newly


def masked_min(double[::1] values, unsigned char[::1] frozen, bint skip_last):
    """Minimum over non-frozen nodes (optionally excluding the last); nan if none."""
    cdef Py_ssize_t n = values.shape[0]
    cdef Py_ssize_t stop = n - 1 if skip_last else n
    cdef Py_ssize_t i
    cdef double best = 0.0
    cdef bint found = False
    for i in range(stop):
        if frozen[i]:
            continue
        if not found or values[i] < best:
            best = values[i]
            found = True
    if not found:
        return None
    return best


def reaction_step(double[::1] values, double nu, double tau, double floor,
                  unsigned char[::1] frozen, bint lock_last):
    return _reaction(values, nu, tau, floor, frozen, lock_last)


cdef int _theta_solve(double[::1] u, double[::1] lo, double[::1] di, double[::1] up,
                      double dt, double theta, bint dirichlet, double b_new,
                      double[::1] rhs, double[::1] cp, double[::1] w) nogil:
    cdef Py_ssize_t m = u.shape[0] - 1
    cdef Py_ssize_t n_un = m if dirichlet else m + 1
    cdef Py_ssize_t i
    cdef double expl = 1.0 - theta
    cdef double um1, up1
    for i in range(n_un):
        um1 = u[i - 1] if i > 0 else 0.0
        up1 = u[i + 1] if i < m else 0.0
        rhs[i] = u[i] + expl * dt * (lo[i] * um1 + di[i] * u[i] + up1 * up[i])
    if dirichlet:
        rhs[m - 1] += theta * dt * up[m - 1] * b_new
    # implicit bands are formed on the fly inside a dedicated Thomas sweep
    cdef double denom = 1.0 - theta * dt * di[0]
    if fabs(denom) < _PIVOT_TINY:
        return -1
    cp[0] = (-theta * dt * up[0]) / denom
    w[0] = rhs[0] / denom
    cdef double sub
    for i in range(1, n_un):
        sub = -theta * dt * lo[i]
        denom = (1.0 - theta * dt * di[i]) - sub * cp[i - 1]
        if fabs(denom) < _PIVOT_TINY:
            return -1
        cp[i] = (-theta * dt * up[i]) / denom
        w[i] = (rhs[i] - sub * w[i - 1]) / denom
    for i in range(n_un - 2, -1, -1):
        w[i] = w[i] - cp[i] * w[i + 1]
    if dirichlet:
        w[m] = b_new
    return 0


def theta_diffusion(double[::1] u, double[::1] lo, double[::1] di, double[::1] up,
                    double dt, double theta, bint dirichlet, double b_new):
    cdef Py_ssize_t n = u.shape[0]
    out_arr = np.empty(n)
    rhs_arr = np.empty(n)
    cp_arr = np.empty(n)
    cdef double[::1] out = out_arr
    cdef double[::1] rhs = rhs_arr
    cdef double[::1] cp = cp_arr
    if _theta_solve(u, lo, di, up, dt, theta, dirichlet, b_new, rhs, cp, out) != 0:
        raise LinearSolveFailure("singular tridiagonal system")
    return out_arr


def strang_step(double[::1] u, unsigned char[::1] frozen,
                double[::1] lo, double[::1] di, double[::1] up,
                double nu, double dt, double floor, double theta_try,
                bint dirichlet, double b_diff, double b_end):
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t m = n - 1
    rhs_arr = np.empty(n)
    cp_arr = np.empty(n)
    w_arr = np.empty(n)
    cdef double[::1] rhs = rhs_arr
    cdef double[::1] cp = cp_arr
    cdef double[::1] w = w_arr
    cdef Py_ssize_t i
    cdef int newly1, newly2, status
    cdef bint used_fallback = False
    cdef double hi, lovals, slack

    newly1 = _reaction(u, nu, 0.5 * dt, floor, frozen, dirichlet)

    hi = u[0]
    lovals = u[0]
    for i in range(1, n):
        if u[i] > hi:
            hi = u[i]
        if u[i] < lovals:
            lovals = u[i]
    if dirichlet:
        if b_diff > hi:
            hi = b_diff
        if b_diff < lovals:
            lovals = b_diff

    status = _theta_solve(u, lo, di, up, dt, theta_try, dirichlet, b_diff, rhs, cp, w)
    if status != 0:
        raise LinearSolveFailure("singular tridiagonal system")
    if theta_try != 1.0:
        slack = 1e-12 * (1.0 if fabs(hi) < 1.0 else fabs(hi))
        for i in range(n):
            if w[i] > hi + slack or w[i] < lovals - slack or w[i] <= 0.0:
                used_fallback = True
                break
        if used_fallback:
            status = _theta_solve(u, lo, di, up, dt, 1.0, dirichlet, b_diff, rhs, cp, w)
            if status != 0:
                raise LinearSolveFailure("singular tridiagonal system")
    for i in range(n):
        if w[i] <= 0.0:
            w[i] = floor  # possible only for dim >= 4 stencils on rough data
        u[i] = w[i]
        if frozen[i]:
            u[i] = floor

    newly2 = _reaction(u, nu, 0.5 * dt, floor, frozen, dirichlet)
    if dirichlet:
        u[m] = b_end

    return (newly1 if newly1 >= 0 else newly2), used_fallback
