"""Inverse square root of a large SPD tridiagonal matrix without eigenvectors.

Uses

    D^{-1/2} = (2/pi) * int_R e^s (e^{2s} + D)^{-1} ds,

discretized with the trapezoid rule. The integrand is analytic in the strip
|Im s| < pi/2 and decays like exp(-|s|), so a step of 0.25 and a window of
38 e-folds past the spectral bounds are accurate to ~1e-16 relative for
every eigenvalue. Each node costs one O(n) tridiagonal sweep, so memory
stays O(n) even for chains with 10^4+ particles.
"""
import math

import numpy as np

from . import kernels
from .errors import SingularModelError

STEP = 0.25
MARGIN = 38.0


class TridiagonalInverseSqrt:
    """Apply D^{-1/2} (and D^{1/2}) for tridiagonal ``D = tridiag(off, diag, off)``."""

    def __init__(self, diag, off, bounds=None):
        self.diag = np.ascontiguousarray(diag, dtype=float)
        self.off = np.ascontiguousarray(off, dtype=float)
        if bounds is None:
            from .model import _tridiagonal_extremes

            bounds = _tridiagonal_extremes(self.diag, self.off)
        lo, hi = bounds
        if not lo > 0:
            raise SingularModelError(f"matrix is not positive definite (min eigenvalue {lo:.3e})")
        self.bounds = (float(lo), float(hi))
        s_lo = 0.5 * math.log(lo) - MARGIN
        s_hi = 0.5 * math.log(hi) + MARGIN
        count = int(math.ceil((s_hi - s_lo) / STEP)) + 1
        s = s_lo + STEP * np.arange(count)
        self.shifts = np.exp(2.0 * s)
        self.weights = (2.0 / math.pi) * STEP * np.exp(s)

    @property
    def n(self):
        return len(self.diag)

    def matvec(self, v):
        out = self.diag * v
        out[:-1] += self.off * v[1:]
        out[1:] += self.off * v[:-1]
        return out

    def diagonal(self):
        return kernels.resolvent_diagonal_sum(self.diag, self.off, self.shifts, self.weights)

    def apply(self, v):
        v = np.ascontiguousarray(v, dtype=float)
        return kernels.resolvent_solve_sum(self.diag, self.off, self.shifts, self.weights, v)

    def apply_sqrt(self, v):
        return self.apply(self.matvec(np.asarray(v, dtype=float)))
