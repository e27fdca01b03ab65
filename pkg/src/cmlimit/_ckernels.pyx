# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops. Signatures mirror ``cmlimit._pykernels``."""
import numpy as np

from libc.math cimport ceil


def resolvent_diagonal_sum(const double[::1] a, const double[::1] b,
                           const double[::1] shifts, const double[::1] weights):
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t nshift = shifts.shape[0]
    out_arr = np.zeros(n)
    fwd_arr = np.empty(n)
    cdef double[::1] out = out_arr
    cdef double[::1] fwd = fwd_arr
    cdef Py_ssize_t i, j
    cdef double s, w, bwd, left, right, piv
    with nogil:
        for j in range(nshift):
            s = shifts[j]
            w = weights[j]
            fwd[0] = a[0] + s
            for i in range(1, n):
                fwd[i] = a[i] + s - b[i - 1] * b[i - 1] / fwd[i - 1]
            out[n - 1] += w / fwd[n - 1]
            bwd = a[n - 1] + s
            for i in range(n - 2, -1, -1):
                right = b[i] * b[i] / bwd
                bwd = a[i] + s - right
                if i > 0:
                    left = b[i - 1] * b[i - 1] / fwd[i - 1]
                else:
                    left = 0.0
                piv = a[i] + s - left - right
                out[i] += w / piv
    return out_arr


def resolvent_solve_sum(const double[::1] a, const double[::1] b,
                        const double[::1] shifts, const double[::1] weights,
                        const double[::1] rhs):
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t nshift = shifts.shape[0]
    out_arr = np.zeros(n)
    cp_arr = np.zeros(n)
    dp_arr = np.empty(n)
    cdef double[::1] out = out_arr
    cdef double[::1] cp = cp_arr
    cdef double[::1] dp = dp_arr
    cdef Py_ssize_t i, j
    cdef double s, w, denom, x
    with nogil:
        for j in range(nshift):
            s = shifts[j]
            w = weights[j]
            denom = a[0] + s
            dp[0] = rhs[0] / denom
            if n > 1:
                cp[0] = b[0] / denom
            for i in range(1, n):
                denom = a[i] + s - b[i - 1] * cp[i - 1]
                dp[i] = (rhs[i] - b[i - 1] * dp[i - 1]) / denom
                if i < n - 1:
                    cp[i] = b[i] / denom
            x = dp[n - 1]
            out[n - 1] += w * x
            for i in range(n - 2, -1, -1):
                x = dp[i] - cp[i] * x
                out[i] += w * x
    return out_arr


def verlet_harmonic(double x0, double p0, double mass, double stiffness,
                    double center, const double[::1] t_grid, double dt):
    cdef Py_ssize_t m = t_grid.shape[0]
    xs_arr = np.empty(m)
    ps_arr = np.empty(m)
    cdef double[::1] xs = xs_arr
    cdef double[::1] ps = ps_arr
    cdef double x = x0, p = p0, h, f
    cdef long nsub, s
    cdef Py_ssize_t j
    with nogil:
        xs[0] = x
        ps[0] = p
        f = -stiffness * (x - center)
        for j in range(1, m):
            nsub = <long> ceil((t_grid[j] - t_grid[j - 1]) / dt - 1e-9)
            if nsub < 1:
                nsub = 1
            h = (t_grid[j] - t_grid[j - 1]) / nsub
            for s in range(nsub):
                p += 0.5 * h * f
                x += h * p / mass
                f = -stiffness * (x - center)
                p += 0.5 * h * f
            xs[j] = x
            ps[j] = p
    return xs_arr, ps_arr
