"""Quadratic N-particle chain Hamiltonians.

H = sum_i p_i^2 / (2 m_i) + 1/2 (x - c)^T K (x - c)

with K assembled from an external trap (common harmonic trap or site
pinning) and harmonic pair springs. Masses are renormalized so that they
always sum to the total mass M.
"""
from __future__ import annotations

import configparser
import enum
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy import linalg

from .errors import InvalidSpecError, SingularModelError

#: Largest particle count for which a dense stiffness matrix is built.
DENSE_LIMIT = 4096


class TrapKind(str, enum.Enum):
    NONE = "none"
    COMMON = "common"
    PINNING = "pinning"


class InteractionKind(str, enum.Enum):
    NONE = "none"
    NEAREST = "nearest"
    ALL = "all"


class ScalingPreset(str, enum.Enum):
    BARE = "bare"
    ASSUMPTION_PRESERVING = "assumption-preserving"


_ALIASES = {
    "commontrap": "common", "common_trap": "common", "trap": "common",
    "sitepinning": "pinning", "site_pinning": "pinning", "pinned": "pinning",
    "nearestneighbor": "nearest", "nearest_neighbor": "nearest", "nn": "nearest",
    "alltoall": "all", "all_to_all": "all",
    "assumptionpreserving": "assumption-preserving",
    "assumption_preserving": "assumption-preserving", "preserving": "assumption-preserving",
}


def _parse_enum(cls, value):
    if isinstance(value, cls):
        return value
    key = str(value).strip().lower()
    key = _ALIASES.get(key.replace("-", "").replace(" ", ""), _ALIASES.get(key, key))
    try:
        return cls(key)
    except ValueError:
        choices = ", ".join(m.value for m in cls)
        raise InvalidSpecError(f"unknown {cls.__name__} {value!r} (expected one of {choices})") from None


@dataclass(frozen=True)
class TrapSpec:
    kind: TrapKind = TrapKind.NONE
    nu: float | None = None
    k_pin: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", _parse_enum(TrapKind, self.kind))
        if self.kind is TrapKind.COMMON and not (self.nu is not None and self.nu > 0):
            raise InvalidSpecError("common trap requires frequency nu > 0")
        if self.kind is TrapKind.PINNING and not (self.k_pin is not None and self.k_pin > 0):
            raise InvalidSpecError("site pinning requires k_pin > 0")

    @classmethod
    def common(cls, nu):
        return cls(TrapKind.COMMON, nu=float(nu))

    @classmethod
    def pinning(cls, k_pin):
        return cls(TrapKind.PINNING, k_pin=float(k_pin))


@dataclass(frozen=True)
class InteractionSpec:
    kind: InteractionKind = InteractionKind.NONE
    g: float = 0.0
    kappa0: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", _parse_enum(InteractionKind, self.kind))
        if self.g < 0:
            raise InvalidSpecError("coupling g must be >= 0")
        if not self.kappa0 > 0:
            raise InvalidSpecError("base stiffness kappa0 must be > 0")


@dataclass(frozen=True)
class SystemSpec:
    """Declarative description of a chain.

    ``bare_masses`` defaults to equal masses; they are rescaled so the total
    is ``total_mass`` whatever ``n_particles`` is.
    """

    n_particles: int
    hbar: float = 1.0
    total_mass: float = 1.0
    bare_masses: tuple[float, ...] | None = None
    trap: TrapSpec = field(default_factory=TrapSpec)
    interaction: InteractionSpec = field(default_factory=InteractionSpec)
    scaling_preset: ScalingPreset = ScalingPreset.BARE
    extent: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "scaling_preset", _parse_enum(ScalingPreset, self.scaling_preset))
        if int(self.n_particles) != self.n_particles or self.n_particles < 1:
            raise InvalidSpecError(f"n_particles must be a positive integer, got {self.n_particles!r}")
        object.__setattr__(self, "n_particles", int(self.n_particles))
        if not self.hbar > 0:
            raise InvalidSpecError("hbar must be > 0")
        if not self.total_mass > 0:
            raise InvalidSpecError("total_mass must be > 0")
        if not self.extent > 0:
            raise InvalidSpecError("extent must be > 0")
        if self.bare_masses is not None:
            masses = tuple(float(m) for m in self.bare_masses)
            if len(masses) != self.n_particles:
                raise InvalidSpecError(
                    f"bare_masses has length {len(masses)}, expected {self.n_particles}")
            if any(not m > 0 for m in masses):
                raise InvalidSpecError("bare masses must be strictly positive")
            object.__setattr__(self, "bare_masses", masses)

    def masses(self):
        if self.bare_masses is None:
            return np.ones(self.n_particles)
        return np.array(self.bare_masses)

    def with_n(self, n):
        """Same system with ``n`` equal-mass particles."""
        return replace(self, n_particles=n, bare_masses=None)


@dataclass(frozen=True, eq=False)
class Tridiagonal:
    """Symmetric tridiagonal matrix stored as diagonal and off-diagonal bands."""

    diag: np.ndarray
    off: np.ndarray

    @property
    def shape(self):
        n = len(self.diag)
        return (n, n)

    def to_dense(self):
        return np.diag(self.diag) + np.diag(self.off, 1) + np.diag(self.off, -1)

    def matvec(self, v):
        out = self.diag * v
        out[:-1] += self.off * v[1:]
        out[1:] += self.off * v[:-1]
        return out


@dataclass(frozen=True, eq=False)
class QuadraticModel:
    masses: np.ndarray
    stiffness: np.ndarray | Tridiagonal
    centers: np.ndarray
    hbar: float
    trap: TrapSpec | None = None
    translation_invariant: bool = True
    nominal_mass: float | None = None
    stiffness_scale: float = 1.0

    @property
    def n(self):
        return len(self.masses)

    @property
    def total_mass(self):
        return float(np.sum(self.masses))

    @property
    def weights(self):
        return self.masses / self.total_mass

    @property
    def is_tridiagonal(self):
        return isinstance(self.stiffness, Tridiagonal)

    def dense_stiffness(self):
        if isinstance(self.stiffness, Tridiagonal):
            if self.n > DENSE_LIMIT:
                raise MemoryError(f"refusing to densify a {self.n}x{self.n} stiffness matrix")
            return self.stiffness.to_dense()
        return np.asarray(self.stiffness, dtype=float)

    def dynamical_matrix(self):
        """Mass-weighted stiffness M^-1/2 K M^-1/2 (dense)."""
        s = 1.0 / np.sqrt(self.masses)
        return s[:, None] * self.dense_stiffness() * s[None, :]

    def dynamical_bands(self):
        """Bands (diag, off) of the dynamical matrix; only for tridiagonal stiffness."""
        if not self.is_tridiagonal:
            raise ValueError("stiffness is not tridiagonal")
        s = 1.0 / np.sqrt(self.masses)
        return self.stiffness.diag * s * s, self.stiffness.off * s[:-1] * s[1:]

    def stiffness_matvec(self, v):
        if self.is_tridiagonal:
            return self.stiffness.matvec(v)
        return np.asarray(self.stiffness) @ v

    def potential_energy(self, x):
        d = np.asarray(x, dtype=float) - self.centers
        return 0.5 * float(d @ self.stiffness_matvec(d))


@dataclass(frozen=True)
class ModelDiagnostics:
    symmetry_defect: float
    min_eigenvalue: float
    positive_definite: bool
    mass_sum_residual: float
    weight_sum_residual: float
    kohn_residual: float | None
    null_space: np.ndarray | None

    @property
    def ok(self):
        return self.positive_definite and self.symmetry_defect == 0.0


def renormalize_masses(bare, total_mass):
    """Rescale ``bare`` so the masses sum to ``total_mass``."""
    bare = np.asarray(bare, dtype=float)
    if bare.ndim != 1 or bare.size == 0:
        raise InvalidSpecError("mass list must be non-empty")
    if not np.all(bare > 0):
        raise InvalidSpecError("masses must be strictly positive")
    if not total_mass > 0:
        raise InvalidSpecError("total mass must be > 0")
    return total_mass * (bare / np.sum(bare))


def lattice_centers(n, extent):
    if n == 1:
        return np.zeros(1)
    return np.linspace(-0.5 * extent, 0.5 * extent, n)


def build_model(spec: SystemSpec, *, allow_singular=False) -> QuadraticModel:
    """Assemble the quadratic model for ``spec``.

    Raises :class:`SingularModelError` when the stiffness has a zero mode,
    unless ``allow_singular`` is set.
    """
    n = spec.n_particles
    masses = renormalize_masses(spec.masses(), spec.total_mass)
    trap = spec.trap
    if trap.kind is TrapKind.PINNING:
        centers = lattice_centers(n, spec.extent)
    else:
        centers = np.zeros(n)

    diag = np.zeros(n)
    if trap.kind is TrapKind.COMMON:
        diag += masses * trap.nu**2
    elif trap.kind is TrapKind.PINNING:
        diag += trap.k_pin

    inter = spec.interaction
    coupling = inter.g * inter.kappa0
    scale = float(n) if spec.scaling_preset is ScalingPreset.ASSUMPTION_PRESERVING else 1.0

    if inter.kind is InteractionKind.ALL and coupling > 0:
        if n > DENSE_LIMIT:
            raise InvalidSpecError(f"all-to-all coupling is limited to n <= {DENSE_LIMIT}")
        K = np.diag(diag) + coupling * (n * np.eye(n) - np.ones((n, n)))
        stiffness = scale * K
    else:
        off = np.zeros(max(n - 1, 0))
        if inter.kind is InteractionKind.NEAREST and coupling > 0 and n > 1:
            diag[:-1] += coupling
            diag[1:] += coupling
            off -= coupling
        stiffness = Tridiagonal(scale * diag, scale * off)

    model = QuadraticModel(masses, stiffness, centers, float(spec.hbar), trap=trap,
                           nominal_mass=float(spec.total_mass), stiffness_scale=scale)
    if not allow_singular:
        diag_report = validate(model)
        if not diag_report.positive_definite:
            raise SingularModelError(
                f"stiffness is not positive definite (min eigenvalue {diag_report.min_eigenvalue:.3e}); "
                f"{_describe_null_space(diag_report.null_space)}",
                null_space=diag_report.null_space,
            )
    return model


def _describe_null_space(null):
    if null is None or null.shape[1] == 0:
        return "null space not resolved"
    if null.shape[1] == 1:
        v = null[:, 0]
        if np.allclose(v, v[0], rtol=1e-8, atol=1e-12):
            return "null space is the uniform translation vector"
    return f"null space has dimension {null.shape[1]}"


def _tridiagonal_extremes(diag, off):
    n = len(diag)
    if n == 1:
        return float(diag[0]), float(diag[0])
    lo = linalg.eigvalsh_tridiagonal(diag, off, select="i", select_range=(0, 0))[0]
    hi = linalg.eigvalsh_tridiagonal(diag, off, select="i", select_range=(n - 1, n - 1))[0]
    return float(lo), float(hi)


def validate(model: QuadraticModel) -> ModelDiagnostics:
    """Report symmetry, definiteness, mass normalization and CM-decoupling residuals."""
    n = model.n
    K = model.stiffness
    null = None
    if isinstance(K, Tridiagonal):
        sym = 0.0
        lo, hi = _tridiagonal_extremes(K.diag, K.off)
        tol = 1e-10 * max(abs(hi), 1e-300)
        pd = lo > tol
        if not pd:
            if n == 1:
                null = np.ones((1, 1))
            else:
                _, null = linalg.eigh_tridiagonal(K.diag, K.off, select="v", select_range=(-np.inf, tol))
    else:
        K = np.asarray(K, dtype=float)
        sym = float(np.max(np.abs(K - K.T))) if n else 0.0
        evals, evecs = np.linalg.eigh(0.5 * (K + K.T))
        lo, hi = float(evals[0]), float(evals[-1])
        tol = 1e-10 * max(abs(hi), 1e-300)
        pd = lo > tol
        if not pd:
            null = evecs[:, np.abs(evals) <= tol]

    mass_res = 0.0
    if model.nominal_mass is not None:
        mass_res = abs(model.total_mass - model.nominal_mass) / model.nominal_mass
    kohn = None
    if model.trap is not None and model.trap.kind is TrapKind.COMMON and model.translation_invariant:
        kohn = kohn_residual(model)
    return ModelDiagnostics(
        symmetry_defect=sym,
        min_eigenvalue=lo,
        positive_definite=bool(pd),
        mass_sum_residual=mass_res,
        weight_sum_residual=abs(float(np.sum(model.weights)) - 1.0),
        kohn_residual=kohn,
        null_space=null,
    )


def cm_frequency(model: QuadraticModel) -> float:
    """Trap frequency seen by the CM mode of a common-trap model (preset scaling included)."""
    return model.trap.nu * math.sqrt(model.stiffness_scale)


def kohn_residual(model: QuadraticModel) -> float:
    """|D u - nu^2 u| / nu^2 for the mass-weighted uniform vector u (unit norm)."""
    nu2 = cm_frequency(model) ** 2
    sq = np.sqrt(model.masses)
    u = sq / np.linalg.norm(sq)
    Du = model.stiffness_matvec(u / sq) / sq
    return float(np.linalg.norm(Du - nu2 * u) / nu2)


def cm_rigid_stiffness(model: QuadraticModel) -> float:
    """Stiffness felt by a rigid translation of the whole chain, 1^T K 1."""
    ones = np.ones(model.n)
    return float(ones @ model.stiffness_matvec(ones))


# -- configuration files ---------------------------------------------------

_FLOAT_KEYS = ("hbar", "total_mass", "extent", "trap.nu", "trap.k_pin",
               "interaction.g", "interaction.kappa0")


def spec_from_mapping(values) -> SystemSpec:
    """Build a :class:`SystemSpec` from flat ``[system]`` keys (strings allowed)."""
    vals = {k.strip().lower(): v for k, v in dict(values).items()}
    known = {"n", "bare_masses", "trap.kind", "interaction.kind", "scaling_preset", *_FLOAT_KEYS}
    unknown = sorted(set(vals) - known)
    if unknown:
        raise InvalidSpecError(f"unknown [system] keys: {', '.join(unknown)}")
    try:
        num = {k: float(vals[k]) for k in _FLOAT_KEYS if k in vals and str(vals[k]).strip() != ""}
        n = int(vals.get("n", 1))
        bare = vals.get("bare_masses")
        if isinstance(bare, str):
            bare = tuple(float(x) for x in bare.split(",") if x.strip())
    except (TypeError, ValueError) as exc:
        raise InvalidSpecError(f"malformed [system] value: {exc}") from None

    trap_kind = _parse_enum(TrapKind, vals.get("trap.kind", "none"))
    if trap_kind is TrapKind.COMMON:
        trap = TrapSpec.common(num.get("trap.nu", 1.0))
    elif trap_kind is TrapKind.PINNING:
        trap = TrapSpec.pinning(num.get("trap.k_pin", 1.0))
    else:
        trap = TrapSpec()
    interaction = InteractionSpec(
        kind=vals.get("interaction.kind", "none"),
        g=num.get("interaction.g", 0.0),
        kappa0=num.get("interaction.kappa0", 1.0),
    )
    return SystemSpec(
        n_particles=n,
        hbar=num.get("hbar", 1.0),
        total_mass=num.get("total_mass", 1.0),
        bare_masses=bare,
        trap=trap,
        interaction=interaction,
        scaling_preset=vals.get("scaling_preset", "bare"),
        extent=num.get("extent", 1.0),
    )


def load_config(path):
    """Read an INI-style config file.

    Returns ``(spec, sweep)`` where ``sweep`` holds the raw ``[sweep]`` keys
    (empty when the section is absent).
    """
    path = Path(path)
    if not path.is_file():
        raise InvalidSpecError(f"config file not found: {path}")
    parser = configparser.ConfigParser()
    try:
        parser.read_string(path.read_text())
    except configparser.Error as exc:
        raise InvalidSpecError(f"cannot parse {path}: {exc}") from None
    if not parser.has_section("system"):
        raise InvalidSpecError(f"{path} has no [system] section")
    spec = spec_from_mapping(parser["system"])
    sweep = dict(parser["sweep"]) if parser.has_section("sweep") else {}
    return spec, sweep
