"""Compiled vs pure-Python kernel timings.

    python3 benchmarks/bench_kernels.py [--repeat 3]

Times the three hot loops on each importable backend, plus one end-to-end
structured ground-state evaluation, and prints a table with speedups.
"""
import argparse
import math
import os
import subprocess
import sys
import time

import numpy as np

from cmlimit import kernels


def best_time(fn, repeat):
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def cases(n_chain, n_shifts, n_steps):
    a = np.full(n_chain, 3.0)
    b = np.full(n_chain - 1, -1.0)
    shifts = np.exp(np.linspace(-10, 10, n_shifts))
    weights = np.linspace(0.1, 1.0, n_shifts)
    rhs = np.ones(n_chain)
    period = 2 * math.pi
    t = np.linspace(0.0, period * n_steps / 1000, 101)
    return {
        f"resolvent_diagonal_sum n={n_chain} shifts={n_shifts}":
            lambda k: k.resolvent_diagonal_sum(a, b, shifts, weights),
        f"resolvent_solve_sum n={n_chain} shifts={n_shifts}":
            lambda k: k.resolvent_solve_sum(a, b, shifts, weights, rhs),
        f"verlet_harmonic steps={n_steps}":
            lambda k: k.verlet_harmonic(1.0, 0.0, 1.0, 1.0, 0.0, t, 1e-3 * period),
    }


def end_to_end(backend, n):
    code = (
        "import time\n"
        "from cmlimit.model import SystemSpec, TrapSpec, InteractionSpec, build_model\n"
        "from cmlimit.gaussian import ground_cm_observables\n"
        f"m = build_model(SystemSpec({n}, trap=TrapSpec.pinning(1.0), interaction=InteractionSpec('nearest', g=1.0),"
        " scaling_preset='assumption-preserving', extent=100.0))\n"
        "t = time.perf_counter(); ground_cm_observables(m); print(time.perf_counter() - t)\n"
    )
    env = dict(os.environ)
    if backend == "python":
        env["CMLIMIT_PURE_PYTHON"] = "1"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    return float(out.stdout.strip())


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--chain", type=int, default=4096)
    ap.add_argument("--shifts", type=int, default=300)
    ap.add_argument("--steps", type=int, default=100000)
    args = ap.parse_args(argv)

    found = kernels.backends()
    print(f"active backend: {kernels.BACKEND}; available: {', '.join(sorted(found))}")
    rows = []
    for label, fn in cases(args.chain, args.shifts, args.steps).items():
        times = {name: best_time(lambda: fn(mod), args.repeat) for name, mod in found.items()}
        rows.append((label, times))
    times = {name: end_to_end(name, 16384) for name in found}
    rows.append(("ground_cm_observables n=16384", times))

    print(f"{'kernel':48s} {'python [s]':>12s} {'cython [s]':>12s} {'speedup':>9s}")
    for label, t in rows:
        py, cy = t.get("python"), t.get("cython")
        cy_s = f"{cy:12.4f}" if cy is not None else f"{'n/a':>12s}"
        sp = f"{py / cy:8.1f}x" if cy else f"{'n/a':>9s}"
        print(f"{label:48s} {py:12.4f} {cy_s} {sp}")


if __name__ == "__main__":
    main()
