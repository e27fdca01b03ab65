"""N-sweeps and closed-form evaluators for the large-N statements.

Covers CM localization scaling, commutator suppression between a finite
block and the whole chain, the strong versus norm convergence distances
of the total-momentum Weyl operator, and the finite-volume tail bound.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import optimize, special

from .errors import InsufficientDataError, InvalidArgumentError, SingularModelError
from .gaussian import CMObservables, ground_cm_observables
from .model import SystemSpec, build_model, renormalize_masses

SWEEP_OBSERVABLES = ("var_x", "var_p", "gap4", "gap5", "gap6", "gap7", "gap8", "xi", "sp_var")


@dataclass(frozen=True)
class ScalingSeries:
    name: str
    n_values: tuple
    observable: tuple
    fit_exponent: float | None = None
    fit_prefactor: float | None = None
    fit_r2: float | None = None

    def summary(self):
        return {"exponent": self.fit_exponent, "prefactor": self.fit_prefactor, "r2": self.fit_r2}


def fit_power_law(n_values, y_values):
    """Least squares of log y on log n over the positive samples.

    Returns ``(exponent, prefactor, r2)``. A constant series has r2 = 1.
    """
    n = np.asarray(n_values, dtype=float)
    y = np.array([np.nan if v is None else v for v in y_values], dtype=float)
    keep = np.isfinite(y) & (y > 0) & (n > 0)
    if keep.sum() < 3:
        raise InsufficientDataError(f"need at least 3 positive points, got {int(keep.sum())}")
    lx, ly = np.log(n[keep]), np.log(y[keep])
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    ss_res = float(np.sum(resid**2))
    r2 = 1.0 if ss_tot <= 1e-300 else max(0.0, 1.0 - ss_res / ss_tot)
    return float(slope), float(math.exp(intercept)), float(r2)


def make_series(name, n_values, values):
    try:
        exp, pref, r2 = fit_power_law(n_values, values)
    except InsufficientDataError:
        exp = pref = r2 = None
    return ScalingSeries(name, tuple(n_values), tuple(values), exp, pref, r2)


def _observable_values(obs: CMObservables):
    g = obs.moment_gaps
    return {
        "var_x": obs.var_x, "var_p": obs.var_p,
        "gap4": g[4], "gap5": g[5], "gap6": g[6], "gap7": g[7], "gap8": g[8],
        "xi": obs.correlation_length, "sp_var": obs.single_particle_var_max,
    }


@dataclass(frozen=True)
class SweepResult:
    n_values: tuple
    observations: tuple
    series: dict = field(default_factory=dict)


def localization_sweep(template: SystemSpec, n_list, method="auto", threads=1) -> SweepResult:
    """Ground-state CM observables along ``n_list`` plus power-law fits."""
    n_list = [int(n) for n in n_list]
    if not n_list or any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise InvalidArgumentError("n_list must be non-empty and strictly increasing")

    def point(n):
        try:
            return ground_cm_observables(build_model(template.with_n(n)), method)
        except SingularModelError as exc:
            raise SingularModelError(f"n={n}: {exc}", exc.null_space) from exc

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            obs = list(pool.map(point, n_list))
    else:
        obs = [point(n) for n in n_list]
    columns = {name: [] for name in SWEEP_OBSERVABLES}
    for o in obs:
        for name, v in _observable_values(o).items():
            columns[name].append(v)
    series = {name: make_series(name, n_list, vals) for name, vals in columns.items()}
    return SweepResult(tuple(n_list), tuple(obs), series)


# -- commutator suppression ---------------------------------------------------

@dataclass(frozen=True)
class CommutatorResult:
    closed_form: complex
    direct: complex
    difference: float

    @property
    def magnitude(self):
        return abs(self.closed_form)


def commutator_suppression(k_particles, n_particles, bare_masses=None, total_mass=1.0, hbar=1.0):
    """Expectation of [X_cm^(k), P_cm^(n)] with X_cm^(k) = sum_{i<=k} (m_i/M) x_i.

    Uses the convention [x_j, p_l] = i hbar delta_jl. The closed form is
    i hbar (sum_{i<=k} m_i)/M; ``direct`` sums the single-particle
    commutators over every index pair instead.
    """
    if not (isinstance(k_particles, (int, np.integer)) and 1 <= k_particles <= n_particles):
        raise InvalidArgumentError("need 1 <= k_particles <= n_particles")
    bare = np.ones(n_particles) if bare_masses is None else np.asarray(bare_masses, dtype=float)
    masses = renormalize_masses(bare, total_mass)
    closed = 1j * hbar * float(np.sum(masses[:k_particles])) / total_mass

    block = np.arange(k_particles)
    chain = np.arange(n_particles)
    shared = np.intersect1d(block, chain, assume_unique=True)
    # only j == l survives; every other pair commutes
    direct = 0j
    for j in shared:
        direct += (masses[j] / total_mass) * (1j * hbar)
    return CommutatorResult(closed, complex(direct), abs(closed - direct))


# -- strong vs norm convergence -------------------------------------------------

@dataclass(frozen=True)
class TailSpec:
    """Product-state tail: factor j (1-based) has momentum mean/variance given by callables."""

    means: Callable[[int], float]
    variances: Callable[[int], float]
    truncation: int

    def __post_init__(self):
        if self.truncation < 0:
            raise InvalidArgumentError("truncation must be >= 0")

    @classmethod
    def constant(cls, variance, truncation, mean=0.0):
        return cls(lambda j: mean, lambda j: variance, truncation)

    @classmethod
    def geometric(cls, truncation, ratio=0.5, scale=1.0):
        """Summable fluctuations s_j^2 = scale * ratio**j."""
        return cls(lambda j: 0.0, lambda j: scale * ratio**j, truncation)


def strong_convergence_distance(tail: TailSpec, beta, skip) -> float:
    """d^2 = 2 - 2 Re prod_{j > skip} <exp(i beta p_j)> for the truncated tail."""
    if skip < 0:
        raise InvalidArgumentError("skip must be >= 0")
    log_re = 0.0
    phase = 0.0
    for j in range(skip + 1, tail.truncation + 1):
        s2 = tail.variances(j)
        if s2 < 0:
            raise InvalidArgumentError(f"tail variance at j={j} is negative")
        log_re -= 0.5 * beta * beta * s2
        phase += beta * tail.means(j)
    # 2 - 2 e^a cos b, arranged to avoid cancellation near zero
    d2 = -2.0 * (math.expm1(log_re) * math.cos(phase) - 2.0 * math.sin(0.5 * phase) ** 2)
    return min(max(d2, 0.0), 4.0)


def norm_distance_supremum(s2, tail_length, beta) -> float:
    """Distance |(1 - prod exp(i beta p_j)) psi| for the phase-aligned Gaussian tail.

    Means beta * p_j = pi / tail_length make the product of phases -1, so
    d = sqrt(2 + 2 exp(-beta^2 s2 tail_length / 2)).
    """
    if tail_length < 1:
        raise InvalidArgumentError("tail_length must be >= 1")
    if s2 < 0:
        raise InvalidArgumentError("variance must be >= 0")
    d2 = 2.0 + 2.0 * math.exp(-0.5 * beta * beta * s2 * tail_length)
    return min(math.sqrt(d2), 2.0)


def norm_distance_search(tail_length, beta, s2_max):
    """Numerically maximize the distance over a common tail mean and variance in [0, s2_max].

    Returns ``(d, mean, s2)`` of the best state found.
    """
    if tail_length < 1:
        raise InvalidArgumentError("tail_length must be >= 1")

    def neg_d2(v):
        mean, s2 = v
        a = -0.5 * beta * beta * s2 * tail_length
        b = beta * mean * tail_length
        return -(2.0 - 2.0 * math.exp(a) * math.cos(b))

    period = 2.0 * math.pi / (abs(beta) * tail_length)
    best = None
    for start in np.linspace(0.0, period, 9)[:-1]:
        res = optimize.minimize(neg_d2, x0=[start, 0.5 * s2_max], method="L-BFGS-B",
                                bounds=[(0.0, period), (0.0, s2_max)])
        if best is None or res.fun < best.fun:
            best = res
    d = math.sqrt(max(-best.fun, 0.0))
    return min(d, 2.0), float(best.x[0]), float(best.x[1])


# -- finite-volume bound ---------------------------------------------------------

@dataclass(frozen=True)
class FiniteVolumeBound:
    n_particles: int
    beta_frac: float
    q: float
    log_paper_bound: float
    paper_bound: float
    log_exact_tail: float
    exact_binomial_tail: float


def finite_volume_bound(n_particles, beta_frac, gamma, d) -> FiniteVolumeBound:
    """Loose bound beta^(-beta n) e^(-gamma n d) next to the exact binomial tail.

    The exact tail is P(K >= beta n) for K ~ Binomial(n, q), q = e^(-gamma d),
    evaluated with log-sum-exp.
    """
    if not (isinstance(n_particles, (int, np.integer)) and n_particles >= 1):
        raise InvalidArgumentError("n_particles must be a positive integer")
    if not 0.0 < beta_frac < 1.0:
        raise InvalidArgumentError("beta_frac must lie in (0, 1)")
    if not gamma > 0 or not d >= 0:
        raise InvalidArgumentError("need gamma > 0 and d >= 0")
    n = int(n_particles)
    log_q = -gamma * d
    log_bound = -beta_frac * n * math.log(beta_frac) + n * log_q

    kmin = math.ceil(beta_frac * n - 1e-12)
    k = np.arange(kmin, n + 1, dtype=float)
    log1mq = math.log(-math.expm1(log_q)) if log_q < 0 else -math.inf
    with np.errstate(invalid="ignore"):
        terms = (special.gammaln(n + 1) - special.gammaln(k + 1) - special.gammaln(n - k + 1)
                 + k * log_q + np.where(n - k > 0, (n - k) * log1mq, 0.0))
    log_tail = float(special.logsumexp(terms)) if len(terms) else -math.inf
    log_tail = min(log_tail, 0.0)
    return FiniteVolumeBound(
        n_particles=n, beta_frac=float(beta_frac), q=math.exp(log_q),
        log_paper_bound=log_bound, paper_bound=math.exp(min(log_bound, 700.0)),
        log_exact_tail=log_tail, exact_binomial_tail=math.exp(log_tail),
    )
