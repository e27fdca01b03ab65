"""Pure numpy versions of the compiled kernels in ``_ckernels.pyx``.

The tridiagonal sweeps are sequential along the chain, so they are
vectorized across shifts instead.
"""
import math

import numpy as np


def resolvent_diagonal_sum(a, b, shifts, weights):
    """Return ``sum_j weights[j] * diag((T + shifts[j])^-1)`` for tridiagonal T."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    shifts = np.asarray(shifts, dtype=float)
    weights = np.asarray(weights, dtype=float)
    n = a.shape[0]
    bsq = b * b
    fwd = np.empty((n, shifts.shape[0]))
    fwd[0] = a[0] + shifts
    for i in range(1, n):
        fwd[i] = a[i] + shifts - bsq[i - 1] / fwd[i - 1]
    out = np.empty(n)
    out[n - 1] = weights @ (1.0 / fwd[n - 1])
    bwd = a[n - 1] + shifts
    for i in range(n - 2, -1, -1):
        right = bsq[i] / bwd
        bwd = a[i] + shifts - right
        left = bsq[i - 1] / fwd[i - 1] if i > 0 else 0.0
        out[i] = weights @ (1.0 / (a[i] + shifts - left - right))
    return out


def resolvent_solve_sum(a, b, shifts, weights, rhs):
    """Return ``sum_j weights[j] * (T + shifts[j])^-1 @ rhs`` for tridiagonal T."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    shifts = np.asarray(shifts, dtype=float)
    weights = np.asarray(weights, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    n = a.shape[0]
    k = shifts.shape[0]
    cp = np.zeros((n, k))
    dp = np.empty((n, k))
    denom = a[0] + shifts
    dp[0] = rhs[0] / denom
    if n > 1:
        cp[0] = b[0] / denom
    for i in range(1, n):
        denom = a[i] + shifts - b[i - 1] * cp[i - 1]
        dp[i] = (rhs[i] - b[i - 1] * dp[i - 1]) / denom
        if i < n - 1:
            cp[i] = b[i] / denom
    out = np.empty(n)
    x = dp[n - 1]
    out[n - 1] = weights @ x
    for i in range(n - 2, -1, -1):
        x = dp[i] - cp[i] * x
        out[i] = weights @ x
    return out


def verlet_harmonic(x0, p0, mass, stiffness, center, t_grid, dt):
    """Velocity Verlet for ``V(x) = stiffness/2 (x - center)^2``, sampled on ``t_grid``.

    Each grid interval is split into the fewest equal substeps no longer than ``dt``.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    m = t_grid.shape[0]
    xs = np.empty(m)
    ps = np.empty(m)
    x, p = float(x0), float(p0)
    xs[0], ps[0] = x, p
    f = -stiffness * (x - center)
    for j in range(1, m):
        span = t_grid[j] - t_grid[j - 1]
        nsub = max(1, math.ceil(span / dt - 1e-9))
        h = span / nsub
        for _ in range(nsub):
            p += 0.5 * h * f
            x += h * p / mass
            f = -stiffness * (x - center)
            p += 0.5 * h * f
        xs[j], ps[j] = x, p
    return xs, ps
