import math

import numpy as np
import pytest

from cmlimit import oracle
from cmlimit.errors import InvalidArgumentError, OracleFailureError
from cmlimit.gaussian import ground_energy, ground_state
from cmlimit.model import InteractionSpec, SystemSpec, TrapSpec, build_model

SINGLE = build_model(SystemSpec(1, trap=TrapSpec.common(1.0)))


def test_grid_spec_guards():
    with pytest.raises(InvalidArgumentError):
        oracle.GridSpec(16, 4.0, 1)
    with pytest.raises(InvalidArgumentError):
        oracle.GridSpec(64, 0.0, 1)
    with pytest.raises(InvalidArgumentError):
        oracle.GridSpec(64, 4.0, 4)
    with pytest.raises(InvalidArgumentError):
        oracle.GridSpec(2049, 4.0, 2)
    g = oracle.GridSpec(127, 4.0, 1)
    assert g.spacing == pytest.approx(1 / 16)
    assert len(g.axis()) == 127


def test_single_oscillator():
    r = oracle.grid_ground_state(SINGLE, oracle.GridSpec(512, 4.0, 1))
    assert abs(r.energy - 0.5) <= 1e-5
    assert abs(r.variances[0] - 0.5) <= 1e-4


def test_single_oscillator_matches_golden(oracle_golden):
    model, grid = oracle.golden_cases()["single_oscillator"]
    r = oracle.grid_ground_state(model, grid)
    case = oracle_golden["cases"]["single_oscillator"]
    assert r.energy == pytest.approx(case["energy"], rel=1e-10)
    assert r.cm_variance == pytest.approx(case["cm_variance"], rel=1e-10)


def test_energy_is_variational_and_improves():
    exact = ground_energy(SINGLE)
    errs = []
    for P in (63, 127, 255):
        e = oracle.grid_ground_state(SINGLE, oracle.GridSpec(P, 6.0, 1)).energy
        errs.append(abs(e - exact))
    assert errs[0] > errs[1] > errs[2]


def test_second_order_convergence():
    errs, hs = [], []
    for P in (127, 255, 511):
        g = oracle.GridSpec(P, 6.0, 1)
        r = oracle.grid_ground_state(SINGLE, g)
        hs.append(g.spacing)
        errs.append((abs(r.energy - 0.5), abs(r.cm_variance - 0.5)))
    for i in range(2):
        order = math.log(errs[1][i] / errs[2][i]) / math.log(hs[1] / hs[2])
        assert order == pytest.approx(2.0, abs=0.2)


def test_pair_crosscheck_and_golden(oracle_golden):
    model, grid = oracle.golden_cases()["pinned_pair"]
    report = oracle.crosscheck(model, grid)
    assert report.passed
    names = {r.quantity for r in report.rows}
    assert {"energy", "var_x", "var_p", "cov_x[0,1]"} <= names
    case = oracle_golden["cases"]["pinned_pair"]
    row = {r.quantity: r for r in report.rows}
    assert row["energy"].oracle == pytest.approx(case["energy"], rel=1e-10)
    assert row["var_x"].oracle == pytest.approx(case["cm_variance"], rel=1e-10)


def test_pair_golden_against_engine(oracle_golden):
    model, _ = oracle.golden_cases()["pinned_pair"]
    gs = ground_state(model)
    case = oracle_golden["cases"]["pinned_pair"]
    w = model.weights
    assert float(w @ gs.sigma_xx @ w) == pytest.approx(case["cm_variance"], rel=1e-4)
    assert float(np.sum(gs.sigma_pp)) == pytest.approx(case["cm_momentum_variance"], rel=1e-4)
    assert ground_energy(model) == pytest.approx(case["energy"], rel=1e-4)


def test_coarse_grid_flags_failure():
    report = oracle.crosscheck(SINGLE, oracle.GridSpec(64, 4.0, 1))
    assert not report.passed


def test_non_convergence_raises():
    with pytest.raises(OracleFailureError) as exc:
        oracle.grid_ground_state(SINGLE, oracle.GridSpec(64, 4.0, 1), max_iter=1)
    assert exc.value.residual is not None


def test_three_particles_small_grid():
    model = build_model(SystemSpec(3, trap=TrapSpec.pinning(1.0), interaction=InteractionSpec("nearest", g=0.5),
                                   extent=2.0))
    report = oracle.crosscheck(model, oracle.GridSpec(32, 5.0, 3), tolerance=2e-2)
    assert report.passed
