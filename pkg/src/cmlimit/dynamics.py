"""Coherent displacements, exact Gaussian propagation and the classical CM reference."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import InvalidArgumentError, UnsupportedScenarioError
from .gaussian import GaussianState, NormalModes, _cm_moments, energy, ground_state, normal_modes
from .model import QuadraticModel, TrapKind, cm_frequency, cm_rigid_stiffness


@dataclass(frozen=True)
class ClassicalPoint:
    x: float
    p: float


@dataclass(frozen=True)
class HarmonicPotential:
    """V(x) = stiffness/2 (x - center)^2."""

    stiffness: float
    center: float = 0.0

    def __call__(self, x):
        return 0.5 * self.stiffness * (np.asarray(x) - self.center) ** 2


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    cm_mean_x: np.ndarray
    cm_mean_p: np.ndarray
    energy: np.ndarray
    var_x: np.ndarray | None = None

    def __post_init__(self):
        m = len(self.times)
        lengths = [len(self.cm_mean_x), len(self.cm_mean_p), len(self.energy)]
        if self.var_x is not None:
            lengths.append(len(self.var_x))
        if any(k != m for k in lengths):
            raise ValueError("trajectory columns must have equal length")
        if m > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("trajectory times must be strictly increasing")

    def rows(self):
        for j in range(len(self.times)):
            vx = None if self.var_x is None else float(self.var_x[j])
            yield (float(self.times[j]), float(self.cm_mean_x[j]), float(self.cm_mean_p[j]),
                   float(self.energy[j]), vx)

    def to_csv(self, path):
        from .io import format_number

        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["t", "x_cm", "p_cm", "energy", "var_x"])
            for row in self.rows():
                writer.writerow([format_number(v) if v is not None else "" for v in row])


def displace(state: GaussianState, model: QuadraticModel, x: float, p: float) -> GaussianState:
    """Rigidly translate the chain by ``x`` and boost the total momentum by ``p``.

    The boost is shared out in proportion to mass; the covariance is untouched.
    """
    n = model.n
    mean = state.mean.copy()
    mean[:n] += x
    mean[n:] += p * model.weights
    return GaussianState(mean, state.covariance, state.hbar)


def propagator(model: QuadraticModel, t: float, modes: NormalModes | None = None) -> np.ndarray:
    """Symplectic matrix S(t) acting on deviations (x - c, p)."""
    if modes is None:
        modes = normal_modes(model)
    U, w = modes.mode_matrix, modes.frequencies
    sq = np.sqrt(model.masses)
    A = U / sq[:, None]       # M^-1/2 U
    B = U * sq[:, None]       # M^1/2 U
    c, s = np.cos(w * t), np.sin(w * t)
    n = model.n
    S = np.empty((2 * n, 2 * n))
    S[:n, :n] = (A * c) @ B.T
    S[:n, n:] = (A * (s / w)) @ A.T
    S[n:, :n] = -(B * (w * s)) @ B.T
    S[n:, n:] = (B * c) @ A.T
    return S


def evolve_exact(model: QuadraticModel, state: GaussianState, t: float,
                 modes: NormalModes | None = None) -> GaussianState:
    S = propagator(model, t, modes)
    n = model.n
    dev = state.mean.copy()
    dev[:n] -= model.centers
    mean = S @ dev
    mean[:n] += model.centers
    cov = S @ state.covariance @ S.T
    return GaussianState(mean, 0.5 * (cov + cov.T), state.hbar)


def cm_potential(model: QuadraticModel) -> HarmonicPotential:
    """Quadratic potential felt by the CM under a rigid translation of the chain."""
    return HarmonicPotential(cm_rigid_stiffness(model), float(model.weights @ model.centers))


def default_dt(nu):
    return 1e-3 * 2.0 * math.pi / nu


def classical_trajectory(mass: float, potential: HarmonicPotential, start: ClassicalPoint,
                         t_grid, dt: float) -> Trajectory:
    """Velocity-Verlet orbit of x' = p/M, p' = -V'(x) sampled on ``t_grid``.

    The orbit starts at ``start`` at time ``t_grid[0]``. Each grid interval is
    covered by equal substeps no longer than ``dt``.
    """
    if not dt > 0:
        raise InvalidArgumentError("dt must be > 0")
    t_grid = np.ascontiguousarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or len(t_grid) == 0:
        raise InvalidArgumentError("t_grid must be a non-empty 1-D sequence")
    if len(t_grid) > 1 and not np.all(np.diff(t_grid) > 0):
        raise InvalidArgumentError("t_grid must be strictly increasing")
    xs, ps = kernels.verlet_harmonic(float(start.x), float(start.p), float(mass),
                                     float(potential.stiffness), float(potential.center),
                                     t_grid, float(dt))
    xs, ps = np.asarray(xs), np.asarray(ps)
    e = ps**2 / (2.0 * mass) + potential(xs)
    return Trajectory(t_grid, xs, ps, e)


def stroboscopic_energy_drift(traj: Trajectory, period: float) -> float:
    """Largest relative energy change between samples at whole multiples of ``period``.

    Sampling at a fixed orbit phase removes the bounded O(dt^2) energy
    oscillation of a symplectic integrator and leaves only secular drift.
    """
    t0 = traj.times[0]
    k = (traj.times - t0) / period
    on_period = np.abs(k - np.round(k)) < 1e-9 * np.maximum(1.0, k)
    e = traj.energy[on_period]
    e0 = traj.energy[0]
    scale = abs(e0) if e0 != 0 else 1.0
    return float(np.max(np.abs(e - e0)) / scale)


def energy_oscillation(traj: Trajectory) -> float:
    e0 = traj.energy[0]
    scale = abs(e0) if e0 != 0 else 1.0
    return float(np.max(np.abs(traj.energy - e0)) / scale)


@dataclass(frozen=True, eq=False)
class EhrenfestComparison:
    quantum: Trajectory
    classical: Trajectory
    max_mean_deviation: float
    var_x_constancy_defect: float
    energy_shell_residual: float
    total_energy_residual: float
    classical_energy_drift: float
    classical_energy_oscillation: float


def _relative_spread(values, ref):
    values = np.asarray(values)
    if ref == 0:
        return float(np.max(np.abs(values - ref)))
    return float(np.max(np.abs(values - ref)) / abs(ref))


def ehrenfest_compare(model: QuadraticModel, start: ClassicalPoint, t_grid, dt: float
                      ) -> EhrenfestComparison:
    """Exact quantum CM means of the displaced ground state versus the classical orbit.

    Only common-trap models qualify: there the CM is an exact normal mode.
    """
    if model.trap is None or model.trap.kind is not TrapKind.COMMON or not model.translation_invariant:
        raise UnsupportedScenarioError("Ehrenfest comparison needs a common trap with "
                                       "translation-invariant couplings")
    t_grid = np.ascontiguousarray(t_grid, dtype=float)
    modes = normal_modes(model)
    gs = ground_state(model, modes)
    psi0 = displace(gs, model, start.x, start.p)
    M = model.total_mass
    nu = cm_frequency(model)
    pot = HarmonicPotential(M * nu**2, 0.0)

    xs, ps, vx, e_shell, e_tot = [], [], [], [], []
    for t in t_grid:
        st = evolve_exact(model, psi0, t - t_grid[0], modes)
        mx, mp, var_x, _, _ = _cm_moments(st, model)
        xs.append(mx)
        ps.append(mp)
        vx.append(var_x)
        e_shell.append(mp**2 / (2 * M) + float(pot(mx)))
        e_tot.append(energy(model, st))
    quantum = Trajectory(t_grid, np.array(xs), np.array(ps), np.array(e_shell), np.array(vx))
    classical = classical_trajectory(M, pot, start, t_grid, dt)

    dev = max(float(np.max(np.abs(quantum.cm_mean_x - classical.cm_mean_x))),
              float(np.max(np.abs(quantum.cm_mean_p - classical.cm_mean_p))))
    period = 2.0 * math.pi / nu
    return EhrenfestComparison(
        quantum=quantum,
        classical=classical,
        max_mean_deviation=dev,
        var_x_constancy_defect=_relative_spread(vx, vx[0]),
        energy_shell_residual=_relative_spread(e_shell, e_shell[0]),
        total_energy_residual=_relative_spread(e_tot, e_tot[0]),
        classical_energy_drift=stroboscopic_energy_drift(classical, period),
        classical_energy_oscillation=energy_oscillation(classical),
    )
