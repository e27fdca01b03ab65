"""Command-line driver.

    cmlimit SCENARIO [--config FILE] [--n ...] [--nu ...] [--g ...] [--out DIR]

Exit codes: 0 success, 1 a built-in invariant failed, 2 invalid input.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import asymptotics, dynamics, gaussian, oracle
from .errors import CMLimitError, InvalidSpecError
from .io import SCHEMA_VERSION, OutputStage
from .model import (InteractionSpec, SystemSpec, TrapKind, TrapSpec, build_model, cm_frequency,
                    kohn_residual,
                    load_config)

SCENARIOS = ("localize", "kohn", "dynamics", "commutator", "converge", "finite-volume",
             "experiment-sweep", "crosscheck")

OUTPUT_ENV = "CMLIMIT_OUT"


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    scenario: str
    system: SystemSpec
    sweep: dict
    output_dir: str
    threads: int
    seed: int | None
    args: argparse.Namespace


def _float_list(text):
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text):
    vals = _float_list(text)
    if any(v != int(v) for v in vals):
        raise UsageError(f"expected comma-separated integers, got {text!r}")
    return [int(v) for v in vals]


def _parser():
    p = argparse.ArgumentParser(prog="cmlimit", description=__doc__.splitlines()[0])
    p.add_argument("scenario_pos", nargs="?", metavar="SCENARIO", choices=SCENARIOS)
    p.add_argument("--scenario", choices=SCENARIOS)
    p.add_argument("--config", help="INI file with a [system] section (and optional [sweep])")
    p.add_argument("--n", help="particle counts, comma separated")
    p.add_argument("--nu", help="trap frequencies, comma separated")
    p.add_argument("--g", help="coupling constants, comma separated")
    p.add_argument("--out", help=f"output directory (default ${OUTPUT_ENV} or ./cmlimit-out)")
    p.add_argument("--threads", type=int, default=None, help="worker threads (default: all cores)")
    p.add_argument("--seed", type=int, default=None, help="seed for Monte Carlo cross-checks")
    p.add_argument("--dt", type=float, default=None, help="classical integrator step")
    p.add_argument("--periods", type=float, default=10.0)
    p.add_argument("--x0", type=float, default=1.0)
    p.add_argument("--p0", type=float, default=0.0)
    p.add_argument("--k", type=int, default=2, help="block size for the commutator scenario")
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--skip-max", type=int, default=40)
    p.add_argument("--beta-frac", type=float, default=0.5)
    p.add_argument("--gamma-d", type=float, default=1.0)
    p.add_argument("--points", type=int, default=512)
    p.add_argument("--box", type=float, default=5.0)
    return p


def _default_system(scenario):
    if scenario in ("localize", "finite-volume"):
        return SystemSpec(16, trap=TrapSpec.pinning(1.0), interaction=InteractionSpec("nearest", g=1.0),
                          scaling_preset="assumption-preserving", extent=100.0)
    if scenario == "crosscheck":
        return SystemSpec(2, trap=TrapSpec.pinning(1.0), interaction=InteractionSpec("nearest", g=1.0))
    if scenario == "dynamics":
        return SystemSpec(8, trap=TrapSpec.common(1.0), interaction=InteractionSpec("all", g=1.0))
    return SystemSpec(64, trap=TrapSpec.common(1.0), interaction=InteractionSpec("all", g=1.0))


def parse_run_config(argv) -> RunConfig:
    parser = _parser()
    args = parser.parse_args(argv)
    scenario = args.scenario or args.scenario_pos
    if scenario is None:
        raise UsageError("no scenario given")
    if args.scenario and args.scenario_pos and args.scenario != args.scenario_pos:
        raise UsageError("conflicting scenario arguments")
    if args.config:
        system, sweep = load_config(args.config)
    else:
        system, sweep = _default_system(scenario), {}
    threads = args.threads if args.threads is not None else (os.cpu_count() or 1)
    if threads < 1:
        raise UsageError("--threads must be >= 1")
    out = args.out or os.environ.get(OUTPUT_ENV) or "cmlimit-out"
    return RunConfig(scenario, system, sweep, out, threads, args.seed, args)


def _list_arg(cfg, name, parse, default=None, required=False):
    raw = getattr(cfg.args, name)
    if raw is None:
        raw = cfg.sweep.get(name)
    if raw is None:
        if required:
            raise UsageError(f"scenario {cfg.scenario} requires --{name}")
        return default
    vals = parse(raw)
    if not vals:
        raise UsageError(f"--{name} is empty")
    return vals


def _check(checks, name, ok, value=None, tolerance=None):
    checks[name] = {"passed": bool(ok), "value": value, "tolerance": tolerance}


def _summary(cfg, checks, **extra):
    return {"schema_version": SCHEMA_VERSION, "scenario": cfg.scenario, "invariants": checks,
            "passed": all(c["passed"] for c in checks.values()), **extra}


# -- scenarios ------------------------------------------------------------------

def _localize(cfg, stage):
    n_list = _list_arg(cfg, "n", _int_list, default=[16, 64, 256, 1024])
    res = asymptotics.localization_sweep(cfg.system, n_list, threads=cfg.threads)
    hbar = cfg.system.hbar
    rows, checks = [], {}
    worst = math.inf
    for n, o in zip(res.n_values, res.observations):
        g = o.moment_gaps
        rows.append([n, o.var_x, o.var_p, g[4], g[6], o.correlation_length, o.single_particle_var_max])
        worst = min(worst, o.uncertainty_product - 0.25 * hbar * hbar)
    _check(checks, "uncertainty_product_ge_hbar2_over_4", worst >= -1e-12 * hbar * hbar, worst, 1e-12)
    stage.write_csv("localize.csv", ["n", "var_x", "var_p", "gap4", "gap6", "xi", "sp_var"], rows)
    fits = {name: s.summary() for name, s in res.series.items()}
    stage.write_json("summary.json", _summary(cfg, checks, n_values=list(res.n_values), fits=fits))
    return checks


def _common_trap_spec(spec, nu=None, g=None):
    trap = spec.trap
    if nu is not None or trap.kind is not TrapKind.COMMON:
        trap = TrapSpec.common(nu if nu is not None else (trap.nu or 1.0))
    inter = spec.interaction
    if g is not None:
        kind = inter.kind if inter.kind.value != "none" else "all"
        inter = InteractionSpec(kind, g=g, kappa0=inter.kappa0)
    return replace(spec, trap=trap, interaction=inter)


def _require_common(cfg):
    if cfg.args.config and cfg.system.trap.kind is not TrapKind.COMMON and cfg.args.nu is None:
        raise UsageError(f"scenario {cfg.scenario} needs trap.kind = common")


def _kohn(cfg, stage):
    _require_common(cfg)
    g_list = _list_arg(cfg, "g", _float_list, default=[0.0, 0.1, 1.0, 10.0])
    n_list = _list_arg(cfg, "n", _int_list, default=[cfg.system.n_particles])
    rows, checks = [], {}
    spreads = {}
    for n in n_list:
        vals = []
        for g in g_list:
            spec = _common_trap_spec(cfg.system.with_n(n) if n != cfg.system.n_particles else cfg.system, g=g)
            model = build_model(spec)
            obs = gaussian.ground_cm_observables(model)
            res = kohn_residual(model)
            rows.append([n, g, obs.var_x, obs.var_p, res])
            vals.append(obs.var_x)
        spreads[n] = (max(vals) - min(vals)) / abs(np.mean(vals))
    spread = max(spreads.values())
    _check(checks, "var_x_independent_of_g", spread <= 1e-10, spread, 1e-10)
    model = build_model(_common_trap_spec(cfg.system, g=0.0))
    nu_cm = cm_frequency(model)
    ref = gaussian.trap_cm_variance(model.hbar, model.total_mass, nu_cm)
    obs0 = gaussian.ground_cm_observables(model)
    rel = abs(obs0.var_x - ref["hbar_over_2m_nu"]) / ref["hbar_over_2m_nu"]
    _check(checks, "g0_var_x_equals_hbar_over_2m_nu", rel <= 1e-12, rel, 1e-12)
    stage.write_csv("kohn.csv", ["n", "g", "var_x", "var_p", "kohn_residual"], rows)
    stage.write_json("summary.json", _summary(
        cfg, checks, relative_spread=spread, var_x_g0=obs0.var_x, reference=ref))
    return checks


def _dynamics(cfg, stage):
    _require_common(cfg)
    model = build_model(_common_trap_spec(cfg.system))
    nu = cm_frequency(model)
    period = 2.0 * math.pi / nu
    dt = cfg.args.dt if cfg.args.dt is not None else dynamics.default_dt(nu)
    if not dt > 0 or not cfg.args.periods > 0:
        raise UsageError("--dt and --periods must be > 0")
    samples = int(round(100 * cfg.args.periods))
    t_grid = np.linspace(0.0, cfg.args.periods * period, samples + 1)
    start = dynamics.ClassicalPoint(cfg.args.x0, cfg.args.p0)
    cmp = dynamics.ehrenfest_compare(model, start, t_grid, dt)
    amp = math.hypot(start.x, start.p / (model.total_mass * nu))
    # Verlet phase error grows like (nu dt)^2 / 24 per radian
    allowed = 2.0 * amp * (nu * dt) ** 2 / 24.0 * nu * t_grid[-1] + 1e-12
    checks = {}
    _check(checks, "mean_deviation_within_integrator_error", cmp.max_mean_deviation <= allowed,
           cmp.max_mean_deviation, allowed)
    _check(checks, "var_x_constant", cmp.var_x_constancy_defect <= 1e-12, cmp.var_x_constancy_defect, 1e-12)
    _check(checks, "energy_shell_exact", cmp.energy_shell_residual <= 1e-10, cmp.energy_shell_residual, 1e-10)
    _check(checks, "total_energy_exact", cmp.total_energy_residual <= 1e-10, cmp.total_energy_residual, 1e-10)
    _check(checks, "integrator_energy_drift", cmp.classical_energy_drift <= 1e-9, cmp.classical_energy_drift, 1e-9)
    for name, traj in (("trajectory.csv", cmp.quantum), ("classical.csv", cmp.classical)):
        stage.write_csv(name, ["t", "x_cm", "p_cm", "energy", "var_x"], list(traj.rows()))
    stage.write_json("summary.json", _summary(
        cfg, checks, dt=dt, period=period, max_mean_deviation=cmp.max_mean_deviation,
        classical_energy_oscillation=cmp.classical_energy_oscillation))
    return checks


def _commutator(cfg, stage):
    n_list = _list_arg(cfg, "n", _int_list, default=[100, 1000, 10000])
    k = cfg.args.k
    rows, checks = [], {}
    scaled = []
    worst = 0.0
    for n in n_list:
        r = asymptotics.commutator_suppression(k, n, hbar=cfg.system.hbar, total_mass=cfg.system.total_mass)
        rows.append([k, n, r.magnitude, abs(r.direct), r.difference])
        worst = max(worst, r.difference)
        scaled.append(r.magnitude * n)
    _check(checks, "closed_form_matches_direct", worst <= 1e-14, worst, 1e-14)
    ratio = (max(scaled) - min(scaled)) / max(scaled)
    _check(checks, "magnitude_scales_as_1_over_n", ratio <= 1e-14, ratio, 1e-14)
    stage.write_csv("commutator.csv", ["k", "n", "magnitude", "direct_magnitude", "difference"], rows)
    stage.write_json("summary.json", _summary(cfg, checks, k=k))
    return checks


def _converge(cfg, stage):
    beta = cfg.args.beta
    tail = asymptotics.TailSpec.geometric(truncation=max(200, cfg.args.skip_max + 1))
    skips = list(range(0, cfg.args.skip_max + 1))
    d2 = [asymptotics.strong_convergence_distance(tail, beta, s) for s in skips]
    checks = {}
    mono = all(b <= a for a, b in zip(d2, d2[1:]))
    _check(checks, "d2_non_increasing", mono)
    if cfg.args.skip_max >= 30:
        _check(checks, "d2_at_skip_30_below_1e-6", d2[30] < 1e-6, d2[30], 1e-6)
    sup0 = asymptotics.norm_distance_supremum(0.0, 100, beta)
    _check(checks, "norm_supremum_reaches_2", sup0 >= 2 - 1e-3, sup0, 1e-3)
    stage.write_csv("converge.csv", ["skip", "d2"], [[s, v] for s, v in zip(skips, d2)])
    stage.write_json("summary.json", _summary(
        cfg, checks, beta=beta, norm_supremum_s2_0=sup0,
        norm_supremum_s2_half=asymptotics.norm_distance_supremum(0.5, 100, beta)))
    return checks


def _finite_volume(cfg, stage):
    n_list = _list_arg(cfg, "n", _int_list, default=[16, 64, 256, 1024, 4096, 16384])
    rows, fractions, checks = [], {}, {}
    for n in n_list:
        b = asymptotics.finite_volume_bound(n, cfg.args.beta_frac, 1.0, cfg.args.gamma_d)
        rows.append([n, b.paper_bound, b.exact_binomial_tail])
    ok_tail = all(0.0 <= r[2] <= 1.0 for r in rows)
    _check(checks, "exact_tail_in_unit_interval", ok_tail)
    spec = cfg.system
    mc = {}
    if spec.trap.kind is TrapKind.PINNING:
        half = 0.6 * spec.extent
        for n in n_list:
            model = build_model(spec.with_n(n))
            fractions[n] = gaussian.ground_mass_fraction(model, (-half, half))
            if cfg.seed is not None and n <= 512:
                mc[n] = monte_carlo_mass_fraction(model, (-half, half), cfg.seed)
        worst = min(fractions.values())
        _check(checks, "mass_fraction_ge_0.999", worst >= 0.999, worst, 0.999)
    stage.write_csv("finite_volume.csv", ["n", "paper_bound", "exact_tail"], rows)
    stage.write_json("summary.json", _summary(
        cfg, checks, beta_frac=cfg.args.beta_frac, gamma_d=cfg.args.gamma_d,
        mass_fraction={str(k): v for k, v in fractions.items()},
        monte_carlo_mass_fraction={str(k): v for k, v in mc.items()}, seed=cfg.seed))
    return checks


def monte_carlo_mass_fraction(model, interval, seed, samples=20000):
    """Mass fraction from joint samples of the ground-state positions."""
    gs = gaussian.ground_state(model)
    rng = np.random.default_rng(seed)
    x = rng.multivariate_normal(gs.x_mean, gs.sigma_xx, size=samples, method="cholesky")
    inside = (x >= interval[0]) & (x <= interval[1])
    return float(np.mean(inside @ model.weights))


def experiment_grid(system, nu_list, g_list, threads=1):
    points = [(i, j) for i in range(len(nu_list)) for j in range(len(g_list))]

    def point(ij):
        i, j = ij
        spec = _common_trap_spec(system, nu=nu_list[i], g=g_list[j])
        return gaussian.ground_cm_observables(build_model(spec)).var_x

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            values = list(pool.map(point, points))
    else:
        values = [point(ij) for ij in points]
    return [(nu_list[i], g_list[j], v) for (i, j), v in zip(points, values)]


def _experiment_sweep(cfg, stage):
    nu_list = _list_arg(cfg, "nu", _float_list, required=True)
    g_list = _list_arg(cfg, "g", _float_list, required=True)
    if any(v <= 0 for v in nu_list) or any(v < 0 for v in g_list):
        raise UsageError("need nu > 0 and g >= 0")
    rows = experiment_grid(cfg.system, nu_list, g_list, cfg.threads)
    checks = {}
    worst = 0.0
    refs = {}
    scale = float(cfg.system.n_particles) if cfg.system.scaling_preset.value != "bare" else 1.0
    M, hbar = cfg.system.total_mass, cfg.system.hbar
    for nu, g, v in rows:
        ref = gaussian.trap_cm_variance(hbar, M, nu * math.sqrt(scale))
        refs[format(nu, ".17g")] = ref
        worst = max(worst, abs(v - ref["hbar_over_2m_nu"]) / ref["hbar_over_2m_nu"])
    _check(checks, "var_x_equals_hbar_over_2m_nu", worst <= 1e-10, worst, 1e-10)
    stage.write_csv("experiment_sweep.csv", ["nu", "g", "var_x"], rows)
    stage.write_json("summary.json", _summary(cfg, checks, reference=refs))
    return checks


def _crosscheck(cfg, stage):
    spec = cfg.system
    if spec.n_particles > 3:
        raise UsageError("crosscheck handles at most 3 particles")
    grid = oracle.GridSpec(cfg.args.points, cfg.args.box, spec.n_particles)
    report = oracle.crosscheck(build_model(spec), grid)
    checks = {}
    for r in report.rows:
        _check(checks, r.quantity, r.passed, r.rel_error, report.tolerance)
    stage.write_csv("crosscheck.csv", ["quantity", "engine", "oracle", "rel_error", "passed"],
                    [[r.quantity, r.engine, r.oracle, r.rel_error, r.passed] for r in report.rows])
    stage.write_json("summary.json", _summary(cfg, checks, points_per_axis=grid.points_per_axis,
                                              box_halfwidth=grid.box_halfwidth))
    return checks


_DISPATCH = {
    "localize": _localize, "kohn": _kohn, "dynamics": _dynamics, "commutator": _commutator,
    "converge": _converge, "finite-volume": _finite_volume,
    "experiment-sweep": _experiment_sweep, "crosscheck": _crosscheck,
}


def run(argv=None) -> int:
    try:
        cfg = parse_run_config(argv)
        with OutputStage(cfg.output_dir) as stage:
            checks = _DISPATCH[cfg.scenario](cfg, stage)
            written = stage.commit()
    except SystemExit as exc:  # argparse
        return 2 if exc.code not in (0, None) else 0
    except (UsageError, InvalidSpecError, CMLimitError, ValueError) as exc:
        print(f"cmlimit: error: {exc}", file=sys.stderr)
        return 2
    for path in written:
        print(path)
    failed = [name for name, c in checks.items() if not c["passed"]]
    if failed:
        print(f"cmlimit: invariant failure: {', '.join(failed)}", file=sys.stderr)
        return 1
    return 0


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
