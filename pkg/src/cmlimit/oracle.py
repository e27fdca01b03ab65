"""Brute-force real-space ground states for 1-3 particles.

Second-order central differences on a uniform grid with Dirichlet walls,
lowest eigenpair by inverse power iteration (shift 0). Shares nothing
with the Gaussian engine except the model's masses, stiffness values and
centers.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy import ndimage

from .errors import InvalidArgumentError, OracleFailureError
from .model import QuadraticModel

MAX_GRID_SIZE = 2**22
GOLDEN_VERSION = 1


@dataclass(frozen=True)
class GridSpec:
    points_per_axis: int = 512
    box_halfwidth: float = 4.0
    n_particles: int = 1

    def __post_init__(self):
        if self.points_per_axis < 32:
            raise InvalidArgumentError("points_per_axis must be >= 32")
        if not self.box_halfwidth > 0:
            raise InvalidArgumentError("box_halfwidth must be > 0")
        if not 1 <= self.n_particles <= 3:
            raise InvalidArgumentError("grid oracle handles 1 to 3 particles")
        if self.points_per_axis**self.n_particles > MAX_GRID_SIZE:
            raise InvalidArgumentError(
                f"grid of {self.points_per_axis}^{self.n_particles} points exceeds {MAX_GRID_SIZE}")

    @property
    def spacing(self):
        return 2.0 * self.box_halfwidth / (self.points_per_axis + 1)

    def axis(self):
        return np.linspace(-self.box_halfwidth, self.box_halfwidth, self.points_per_axis + 2)[1:-1]


@dataclass(frozen=True, eq=False)
class OracleResult:
    energy: float
    means: np.ndarray
    variances: np.ndarray
    position_covariance: np.ndarray
    momentum_covariance: np.ndarray
    cm_variance: float
    cm_momentum_variance: float
    iterations: int
    residual: float
    grid: GridSpec = field(repr=False)
    psi: np.ndarray = field(repr=False)
    axes: tuple = field(repr=False)


def _second_difference(m, h):
    main = -2.0 * np.ones(m)
    off = np.ones(m - 1)
    return sp.diags([off, main, off], [-1, 0, 1], format="csr") / (h * h)


def _first_difference(m, h):
    off = np.ones(m - 1)
    return sp.diags([-off, off], [-1, 1], format="csr") / (2.0 * h)


def _embed(op, axis, n, m):
    mats = [sp.identity(m, format="csr")] * n
    mats[axis] = op
    out = mats[0]
    for mat in mats[1:]:
        out = sp.kron(out, mat, format="csr")
    return out


def grid_hamiltonian(model: QuadraticModel, grid: GridSpec):
    """Sparse Hamiltonian on the grid and the per-axis coordinates.

    Each particle's axis is centered on its equilibrium position.
    """
    n, m, h = model.n, grid.points_per_axis, grid.spacing
    K = np.asarray(model.dense_stiffness(), dtype=float)
    hbar = model.hbar
    base = grid.axis()
    axes = tuple(base + model.centers[i] for i in range(n))
    lap = _second_difference(m, h)
    H = sp.csr_matrix((m**n, m**n))
    for i in range(n):
        H = H + (-(hbar * hbar) / (2.0 * model.masses[i])) * _embed(lap, i, n, m)
    mesh = np.meshgrid(*[base] * n, indexing="ij")
    V = np.zeros(mesh[0].shape)
    for i in range(n):
        for j in range(n):
            V += 0.5 * K[i, j] * mesh[i] * mesh[j]
    H = H + sp.diags(V.ravel())
    return H.tocsc(), axes


def _inverse_iteration(H, tol, max_iter):
    lu = spla.splu(H)
    v = np.ones(H.shape[0])
    v /= np.linalg.norm(v)
    rq_old = math.inf
    for it in range(1, max_iter + 1):
        w = lu.solve(v)
        v = w / np.linalg.norm(w)
        Hv = H @ v
        rq = float(v @ Hv)
        res = float(np.linalg.norm(Hv - rq * v))
        if abs(rq - rq_old) <= tol * abs(rq) and res <= math.sqrt(tol) * abs(rq):
            return rq, v, it, res
        rq_old = rq
    raise OracleFailureError(f"inverse iteration did not converge in {max_iter} steps "
                             f"(residual {res:.3e})", residual=res)


def grid_ground_state(model: QuadraticModel, grid: GridSpec | None = None, tol=1e-13,
                      max_iter=2000) -> OracleResult:
    n = model.n
    if grid is None:
        grid = GridSpec(n_particles=n)
    elif grid.n_particles != n:
        grid = GridSpec(grid.points_per_axis, grid.box_halfwidth, n)
    H, axes = grid_hamiltonian(model, grid)
    e0, v, iters, res = _inverse_iteration(H, tol, max_iter)

    m, h = grid.points_per_axis, grid.spacing
    psi = v.reshape((m,) * n)
    if psi.sum() < 0:
        psi = -psi
    rho = psi**2 / np.sum(psi**2)
    coords = np.meshgrid(*axes, indexing="ij")
    means = np.array([np.sum(rho * c) for c in coords])
    cov_x = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            cov_x[i, j] = np.sum(rho * (coords[i] - means[i]) * (coords[j] - means[j]))

    # <p_i p_j> = -hbar^2 <psi| d_i d_j psi>; diagonal uses the kinetic stencil
    flat = v / np.linalg.norm(v)
    lap = _second_difference(m, h)
    d1 = _first_difference(m, h)
    grads = [_embed(d1, i, n, m) @ flat for i in range(n)]
    cov_p = np.empty((n, n))
    hbar2 = model.hbar**2
    for i in range(n):
        cov_p[i, i] = -hbar2 * float(flat @ (_embed(lap, i, n, m) @ flat))
        for j in range(i + 1, n):
            cov_p[i, j] = cov_p[j, i] = hbar2 * float(grads[i] @ grads[j])

    w = model.masses / np.sum(model.masses)
    return OracleResult(
        energy=e0, means=means, variances=np.diag(cov_x).copy(),
        position_covariance=cov_x, momentum_covariance=cov_p,
        cm_variance=float(w @ cov_x @ w), cm_momentum_variance=float(np.sum(cov_p)),
        iterations=iters, residual=res, grid=grid, psi=psi, axes=axes,
    )


def grid_characteristic(result: OracleResult, model: QuadraticModel, alpha, beta) -> complex:
    """<exp(i(alpha X_cm + beta P_cm))> by quadrature on the grid wavefunction.

    exp(i(aX + bP)) = exp(i a X) exp(i b P) exp(i a b hbar / 2), and exp(i b P)
    translates every coordinate by b hbar; the shifted wavefunction is
    obtained by cubic spline interpolation.
    """
    n = model.n
    psi = result.psi / math.sqrt(np.sum(result.psi**2))
    h = result.grid.spacing
    shift = beta * model.hbar / h
    idx = np.meshgrid(*[np.arange(result.grid.points_per_axis, dtype=float)] * n, indexing="ij")
    shifted = ndimage.map_coordinates(psi, [g + shift for g in idx], order=3, mode="constant", cval=0.0)
    w = model.masses / np.sum(model.masses)
    coords = np.meshgrid(*result.axes, indexing="ij")
    X = sum(w[i] * coords[i] for i in range(n))
    val = np.sum(psi * np.exp(1j * alpha * X) * shifted)
    return complex(val * np.exp(0.5j * alpha * beta * model.hbar))


@dataclass(frozen=True)
class CrosscheckRow:
    quantity: str
    engine: float
    oracle: float
    rel_error: float
    passed: bool


@dataclass(frozen=True)
class CrosscheckReport:
    rows: tuple
    tolerance: float

    @property
    def passed(self):
        return all(r.passed for r in self.rows)


def crosscheck(model: QuadraticModel, grid: GridSpec | None = None, tolerance=1e-4) -> CrosscheckReport:
    """Relative engine-vs-oracle errors for energy, CM variances and pair covariances."""
    from .gaussian import ground_energy, ground_state

    res = grid_ground_state(model, grid)
    gs = ground_state(model)
    w = model.weights
    engine = {
        "energy": ground_energy(model),
        "var_x": float(w @ gs.sigma_xx @ w),
        "var_p": float(np.sum(gs.sigma_pp)),
    }
    oracle = {"energy": res.energy, "var_x": res.cm_variance, "var_p": res.cm_momentum_variance}
    for i in range(model.n):
        engine[f"var_x[{i}]"] = float(gs.sigma_xx[i, i])
        oracle[f"var_x[{i}]"] = float(res.variances[i])
    for i in range(model.n):
        for j in range(i + 1, model.n):
            engine[f"cov_x[{i},{j}]"] = float(gs.sigma_xx[i, j])
            oracle[f"cov_x[{i},{j}]"] = float(res.position_covariance[i, j])
    rows = []
    for key, ev in engine.items():
        ov = oracle[key]
        rel = abs(ov - ev) / abs(ev) if ev != 0 else abs(ov)
        rows.append(CrosscheckRow(key, ev, ov, rel, rel <= tolerance))
    return CrosscheckReport(tuple(rows), tolerance)


# -- golden values ------------------------------------------------------------

def golden_cases():
    """Reference models whose oracle values are frozen for the test suite."""
    from .model import InteractionSpec, SystemSpec, TrapSpec, build_model

    single = build_model(SystemSpec(1, trap=TrapSpec.common(1.0)))
    pair = build_model(SystemSpec(2, total_mass=1.0, trap=TrapSpec.pinning(1.0),
                                  interaction=InteractionSpec("nearest", g=1.0), extent=1.0))
    return {
        "single_oscillator": (single, GridSpec(512, 4.0, 1)),
        "pinned_pair": (pair, GridSpec(512, 5.0, 2)),
    }


def compute_golden():
    out = {"version": GOLDEN_VERSION, "cases": {}}
    for name, (model, grid) in golden_cases().items():
        r = grid_ground_state(model, grid)
        case = {
            "points_per_axis": grid.points_per_axis,
            "box_halfwidth": grid.box_halfwidth,
            "energy": r.energy,
            "cm_variance": r.cm_variance,
            "cm_momentum_variance": r.cm_momentum_variance,
            "variances": r.variances.tolist(),
            "position_covariance": r.position_covariance.tolist(),
        }
        if model.n == 2:
            case["characteristic_1_1"] = [grid_characteristic(r, model, 1.0, 1.0).real,
                                          grid_characteristic(r, model, 1.0, 1.0).imag]
        out["cases"][name] = case
    return out


def write_golden(path):
    from .io import dumps_json

    Path(path).write_text(dumps_json(compute_golden()))


def read_golden(path):
    data = json.loads(Path(path).read_text())
    if data.get("version") != GOLDEN_VERSION:
        raise ValueError(f"golden file version {data.get('version')} != {GOLDEN_VERSION}")
    return data
