"""Gaussian ground states of quadratic chains and center-of-mass observables.

Phase-space ordering is (x_1..x_n, p_1..p_n). Covariances are symmetrized,
``sigma_ab = <{da, db}>/2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import InvalidArgumentError, SingularModelError
from .model import QuadraticModel, TrapKind
from .spectral import TridiagonalInverseSqrt

#: Tridiagonal models larger than this use the O(n)-memory route by default.
STRUCTURED_THRESHOLD = 256

#: Relative floor below which sampled correlations are treated as noise.
CORRELATION_FLOOR = 1e-14

MOMENT_ORDERS = tuple(range(2, 9))


@dataclass(frozen=True, eq=False)
class NormalModes:
    frequencies: np.ndarray
    mode_matrix: np.ndarray


@dataclass(frozen=True, eq=False)
class GaussianState:
    mean: np.ndarray
    covariance: np.ndarray
    hbar: float

    @property
    def n(self):
        return len(self.mean) // 2

    @property
    def x_mean(self):
        return self.mean[: self.n]

    @property
    def p_mean(self):
        return self.mean[self.n:]

    @property
    def sigma_xx(self):
        return self.covariance[: self.n, : self.n]

    @property
    def sigma_xp(self):
        return self.covariance[: self.n, self.n:]

    @property
    def sigma_pp(self):
        return self.covariance[self.n:, self.n:]


@dataclass(frozen=True)
class CMObservables:
    mean_x: float
    mean_p: float
    var_x: float
    var_p: float
    cov_xp: float
    uncertainty_product: float
    moment_gaps: dict = field(default_factory=dict)
    correlation_length: float | None = None
    single_particle_var_max: float = 0.0


def symplectic_form(n):
    J = np.zeros((2 * n, 2 * n))
    J[:n, n:] = np.eye(n)
    J[n:, :n] = -np.eye(n)
    return J


def normal_modes(model: QuadraticModel) -> NormalModes:
    """Diagonalize the dynamical matrix.

    Frequencies ascend; each mode column is signed so that its largest
    magnitude component is positive.
    """
    D = model.dynamical_matrix()
    evals, U = np.linalg.eigh(0.5 * (D + D.T))
    scale = max(abs(evals[-1]), 1e-300)
    if evals[0] <= 1e-12 * scale:
        raise SingularModelError(f"dynamical matrix has non-positive eigenvalue {evals[0]:.3e}")
    idx = np.argmax(np.abs(U), axis=0)
    signs = np.sign(U[idx, np.arange(U.shape[1])])
    signs[signs == 0] = 1.0
    return NormalModes(np.sqrt(evals), U * signs)


def ground_state(model: QuadraticModel, modes: NormalModes | None = None) -> GaussianState:
    if modes is None:
        modes = normal_modes(model)
    n = model.n
    hbar = model.hbar
    U, w = modes.mode_matrix, modes.frequencies
    isq = 1.0 / np.sqrt(model.masses)
    sq = np.sqrt(model.masses)
    A = isq[:, None] * U
    B = sq[:, None] * U
    cov = np.zeros((2 * n, 2 * n))
    cov[:n, :n] = 0.5 * hbar * (A / w) @ A.T
    cov[n:, n:] = 0.5 * hbar * (B * w) @ B.T
    mean = np.concatenate([model.centers, np.zeros(n)])
    return GaussianState(mean, cov, hbar)


def ground_energy(model: QuadraticModel, modes: NormalModes | None = None) -> float:
    if modes is None:
        modes = normal_modes(model)
    return 0.5 * model.hbar * float(np.sum(modes.frequencies))


def energy(model: QuadraticModel, state: GaussianState) -> float:
    """Expectation value of the Hamiltonian in ``state``."""
    p2 = np.diag(state.sigma_pp) + state.p_mean**2
    kinetic = 0.5 * float(np.sum(p2 / model.masses))
    K = model.dense_stiffness()
    potential = 0.5 * float(np.sum(K * state.sigma_xx)) + model.potential_energy(state.x_mean)
    return kinetic + potential


def symplectic_eigenvalues(state: GaussianState) -> np.ndarray:
    """Williamson spectrum (each value once, ascending)."""
    J = symplectic_form(state.n)
    ev = np.abs(np.linalg.eigvals(J @ state.covariance).imag)
    return np.sort(ev)[::2]


def heisenberg_min_eigenvalue(state: GaussianState) -> float:
    """Smallest eigenvalue of covariance + i hbar/2 J; >= 0 for physical states."""
    H = state.covariance + 0.5j * state.hbar * symplectic_form(state.n)
    return float(np.linalg.eigvalsh(H)[0])


# -- scalar CM marginal ----------------------------------------------------

def _double_factorial_odd(k):
    # (2k-1)!!
    return math.prod(range(1, 2 * k, 2))


def gaussian_moment_gap(mean, var, order):
    """|E[X^n] - E[X]^n| for X ~ N(mean, var), from the central-moment expansion."""
    if not isinstance(order, (int, np.integer)) or not 2 <= order <= 16:
        raise InvalidArgumentError(f"moment order must be an integer in [2, 16], got {order!r}")
    total = 0.0
    for k in range(1, order // 2 + 1):
        total += math.comb(order, 2 * k) * mean ** (order - 2 * k) * _double_factorial_odd(k) * var**k
    return abs(total)


def _cm_moments(state: GaussianState, model: QuadraticModel):
    _check_dims(state, model)
    w = model.weights
    ones = np.ones(model.n)
    mean_x = float(w @ state.x_mean)
    mean_p = float(np.sum(state.p_mean))
    var_x = float(w @ state.sigma_xx @ w)
    var_p = float(ones @ state.sigma_pp @ ones)
    cov_xp = float(w @ state.sigma_xp @ ones)
    return mean_x, mean_p, var_x, var_p, cov_xp


def _check_dims(state, model):
    if state.n != model.n:
        raise InvalidArgumentError(f"state has {state.n} particles, model has {model.n}")


def central_moment_gap(state: GaussianState, model: QuadraticModel, order: int) -> float:
    mean_x, _, var_x, _, _ = _cm_moments(state, model)
    return gaussian_moment_gap(mean_x, var_x, order)


def characteristic_fn(state: GaussianState, model: QuadraticModel, alpha, beta) -> complex:
    """<exp(i (alpha X_cm + beta P_cm))>."""
    mean_x, mean_p, var_x, var_p, cov_xp = _cm_moments(state, model)
    quad = alpha * alpha * var_x + 2.0 * alpha * beta * cov_xp + beta * beta * var_p
    return complex(np.exp(1j * (alpha * mean_x + beta * mean_p) - 0.5 * quad))


def lattice_spacing(model: QuadraticModel) -> float:
    """Pinning-lattice spacing, or 1 (index units) when there is no lattice."""
    if model.trap is not None and model.trap.kind is TrapKind.PINNING and model.n > 1:
        return float(model.centers[-1] - model.centers[0]) / (model.n - 1)
    return 1.0


def correlation_window(n):
    """(i0, rmax) for the correlation-length fit, or None when n < 8."""
    if n < 8:
        return None
    i0 = n // 3
    return i0, min(n // 3, 64)


def fit_correlation_length(row, spacing=1.0):
    """Decay length of |row[r]|, r = 1.., from a log-linear least-squares fit.

    ``row[0]`` is the on-site variance; samples below ``CORRELATION_FLOOR``
    relative to it end the fit window. Returns None when fewer than three
    samples survive or the magnitudes do not decay.
    """
    row = np.abs(np.asarray(row, dtype=float))
    if row[0] <= 0:
        return None
    mags = row[1:]
    keep = 0
    while keep < len(mags) and mags[keep] > CORRELATION_FLOOR * row[0]:
        keep += 1
    if keep < 3:
        return None
    r = np.arange(1, keep + 1, dtype=float)
    slope = np.polyfit(r, np.log(mags[:keep]), 1)[0]
    if not slope < -1e-12:
        return None
    return float(-spacing / slope)


def _assemble(mean_x, mean_p, var_x, var_p, cov_xp, xi, sp_max):
    gaps = {k: gaussian_moment_gap(mean_x, var_x, k) for k in MOMENT_ORDERS}
    return CMObservables(
        mean_x=mean_x, mean_p=mean_p, var_x=var_x, var_p=var_p, cov_xp=cov_xp,
        uncertainty_product=var_x * var_p, moment_gaps=gaps,
        correlation_length=xi, single_particle_var_max=sp_max,
    )


def cm_observables(state: GaussianState, model: QuadraticModel) -> CMObservables:
    mean_x, mean_p, var_x, var_p, cov_xp = _cm_moments(state, model)
    xi = None
    win = correlation_window(model.n)
    if win is not None:
        i0, rmax = win
        xi = fit_correlation_length(state.sigma_xx[i0, i0:i0 + rmax + 1], lattice_spacing(model))
    sp_max = float(np.max(np.diag(state.sigma_xx)))
    return _assemble(mean_x, mean_p, var_x, var_p, cov_xp, xi, sp_max)


class StructuredGroundState:
    """Ground-state second moments of a tridiagonal chain in O(n) memory.

    sigma_xx = hbar/2 M^-1/2 D^-1/2 M^-1/2,  sigma_pp = hbar/2 M^1/2 D^1/2 M^1/2.
    """

    def __init__(self, model: QuadraticModel):
        if not model.is_tridiagonal:
            raise ValueError("structured route needs a tridiagonal stiffness")
        self.model = model
        self.op = TridiagonalInverseSqrt(*model.dynamical_bands())
        self._isq = 1.0 / np.sqrt(model.masses)

    def site_variances(self):
        return 0.5 * self.model.hbar * self._isq**2 * self.op.diagonal()

    def covariance_row(self, i):
        e = np.zeros(self.model.n)
        e[i] = 1.0
        return 0.5 * self.model.hbar * self._isq[i] * self._isq * self.op.apply(e)

    def cm_variances(self):
        m = self.model
        u = m.weights * self._isq
        v = np.sqrt(m.masses)
        var_x = 0.5 * m.hbar * float(u @ self.op.apply(u))
        var_p = 0.5 * m.hbar * float(v @ self.op.apply_sqrt(v))
        return var_x, var_p

    def observables(self) -> CMObservables:
        m = self.model
        var_x, var_p = self.cm_variances()
        xi = None
        win = correlation_window(m.n)
        if win is not None:
            i0, rmax = win
            xi = fit_correlation_length(self.covariance_row(i0)[i0:i0 + rmax + 1], lattice_spacing(m))
        sp_max = float(np.max(self.site_variances()))
        mean_x = float(m.weights @ m.centers)
        return _assemble(mean_x, 0.0, var_x, var_p, 0.0, xi, sp_max)


def _use_structured(model, method):
    if method == "auto":
        return model.is_tridiagonal and model.n > STRUCTURED_THRESHOLD
    if method == "structured":
        return True
    if method == "dense":
        return False
    raise InvalidArgumentError(f"unknown method {method!r}")


def ground_cm_observables(model: QuadraticModel, method="auto") -> CMObservables:
    """CM observables of the ground state, choosing the dense or O(n)-memory route."""
    if _use_structured(model, method):
        return StructuredGroundState(model).observables()
    return cm_observables(ground_state(model), model)


def ground_site_variances(model: QuadraticModel, method="auto") -> np.ndarray:
    if _use_structured(model, method):
        return StructuredGroundState(model).site_variances()
    return np.diag(ground_state(model).sigma_xx).copy()


def mass_fraction_from_marginals(weights, means, variances, interval):
    a, b = interval
    if not a < b:
        raise InvalidArgumentError("interval must satisfy a < b")
    sd = np.sqrt(np.asarray(variances, dtype=float))
    means = np.asarray(means, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        za = np.where(sd > 0, (a - means) / sd, np.where(means >= a, -np.inf, np.inf))
        zb = np.where(sd > 0, (b - means) / sd, np.where(means <= b, np.inf, -np.inf))
    # upper-tail form keeps precision when both bounds sit far above the mean
    prob = np.where(za > 0, special.ndtr(-za) - special.ndtr(-zb), special.ndtr(zb) - special.ndtr(za))
    return float(np.asarray(weights) @ np.clip(prob, 0.0, 1.0))


def mass_fraction_in_interval(state: GaussianState, model: QuadraticModel, interval) -> float:
    """Expected fraction of the total mass inside ``interval`` = (a, b)."""
    _check_dims(state, model)
    return mass_fraction_from_marginals(model.weights, state.x_mean, np.diag(state.sigma_xx), interval)


def ground_mass_fraction(model: QuadraticModel, interval, method="auto") -> float:
    return mass_fraction_from_marginals(
        model.weights, model.centers, ground_site_variances(model, method), interval)


def trap_cm_variance(hbar, total_mass, nu):
    """CM position variance in a common trap.

    Returns the oscillator ground-state value hbar/(2 M nu) and, for side by
    side reporting, the hbar/(M nu) normalization.
    """
    exact = hbar / (2.0 * total_mass * nu)
    return {"hbar_over_2m_nu": exact, "hbar_over_m_nu": 2.0 * exact}


def isolated_site_variance(hbar, stiffness, mass):
    return hbar / (2.0 * math.sqrt(stiffness * mass))
