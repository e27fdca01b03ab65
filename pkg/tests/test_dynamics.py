import math

import numpy as np
import pytest

from cmlimit import dynamics as Dy
from cmlimit.errors import InvalidArgumentError, UnsupportedScenarioError
from cmlimit.gaussian import _cm_moments, energy, ground_state, symplectic_eigenvalues
from cmlimit.model import InteractionSpec, SystemSpec, TrapSpec, build_model


def trap_model(n=6, g=1.0, nu=1.0):
    return build_model(SystemSpec(n, bare_masses=np.linspace(1, 2, n), trap=TrapSpec.common(nu),
                                  interaction=InteractionSpec("all", g=g)))


def cm(state, model):
    mx, mp, *_ = _cm_moments(state, model)
    return mx, mp


def test_displace_translation_and_boost():
    model = trap_model()
    gs = ground_state(model)
    s = Dy.displace(gs, model, 2.0, 0.0)
    assert cm(s, model)[0] == pytest.approx(cm(gs, model)[0] + 2.0, abs=1e-15)
    assert s.covariance is gs.covariance
    s = Dy.displace(gs, model, 0.0, 3.0)
    assert cm(s, model)[1] == pytest.approx(3.0, abs=1e-15)
    back = Dy.displace(Dy.displace(gs, model, 1.0, 1.0), model, -1.0, -1.0)
    np.testing.assert_allclose(cm(back, model), cm(gs, model), atol=1e-14)


def test_half_and_quarter_period():
    model = build_model(SystemSpec(1, trap=TrapSpec.common(1.0)))
    s0 = Dy.displace(ground_state(model), model, 1.0, 0.0)
    np.testing.assert_allclose(cm(Dy.evolve_exact(model, s0, math.pi), model), [-1.0, 0.0], atol=1e-14)
    np.testing.assert_allclose(cm(Dy.evolve_exact(model, s0, math.pi / 2), model), [0.0, -1.0], atol=1e-14)


def test_group_law_and_invariants():
    model = build_model(SystemSpec(7, bare_masses=np.linspace(1, 3, 7), trap=TrapSpec.pinning(1.3),
                                   interaction=InteractionSpec("nearest", g=2.0), extent=3.0))
    rng = np.random.default_rng(3)
    gs = ground_state(model)
    s = Dy.displace(gs, model, 0.3, -0.7)
    s = type(s)(s.mean + rng.normal(0, 0.2, 14), s.covariance, s.hbar)
    a = Dy.evolve_exact(model, Dy.evolve_exact(model, s, 1.7), 2.4)
    b = Dy.evolve_exact(model, s, 4.1)
    np.testing.assert_allclose(a.mean, b.mean, atol=1e-10)
    np.testing.assert_allclose(a.covariance, b.covariance, atol=1e-10)
    np.testing.assert_allclose(symplectic_eigenvalues(b), 0.5, rtol=1e-9)
    assert energy(model, b) == pytest.approx(energy(model, s), rel=1e-10)


def test_propagator_is_symplectic():
    model = trap_model(5)
    S = Dy.propagator(model, 0.83)
    n = model.n
    J = np.block([[np.zeros((n, n)), np.eye(n)], [-np.eye(n), np.zeros((n, n))]])
    np.testing.assert_allclose(S @ J @ S.T, J, atol=1e-12)


def test_classical_returns_after_period():
    traj = Dy.classical_trajectory(1.0, Dy.HarmonicPotential(1.0), Dy.ClassicalPoint(1.0, 0.0),
                                   [0.0, 2 * math.pi], 1e-3)
    assert abs(traj.cm_mean_x[-1] - 1.0) <= 1e-6
    assert abs(traj.cm_mean_p[-1]) <= 1e-6


def test_classical_energy_drift_100_periods():
    T = 2 * math.pi
    t = np.linspace(0.0, 100 * T, 100 * 50 + 1)
    traj = Dy.classical_trajectory(1.0, Dy.HarmonicPotential(1.0), Dy.ClassicalPoint(1.0, 0.0), t, 1e-3 * T)
    assert Dy.stroboscopic_energy_drift(traj, T) <= 1e-9


def test_classical_time_shift_copies():
    T = 2 * math.pi
    t = np.linspace(0.0, T, 4001)
    a = Dy.classical_trajectory(1.0, Dy.HarmonicPotential(1.0), Dy.ClassicalPoint(1.0, 0.0), t, 1e-3)
    b = Dy.classical_trajectory(1.0, Dy.HarmonicPotential(1.0), Dy.ClassicalPoint(0.0, 1.0), t, 1e-3)
    assert a.energy[0] == pytest.approx(0.5) and b.energy[0] == pytest.approx(0.5)
    # b(t) = a(t - T/4); search the shift over one period on the sample grid
    best = math.inf
    for k in range(len(t) - 1):
        da = np.abs(np.roll(a.cm_mean_x[:-1], k) - b.cm_mean_x[:-1])
        dp = np.abs(np.roll(a.cm_mean_p[:-1], k) - b.cm_mean_p[:-1])
        best = min(best, max(da.max(), dp.max()))
    assert best <= 1e-6


def test_classical_rejects_bad_dt():
    with pytest.raises(InvalidArgumentError):
        Dy.classical_trajectory(1.0, Dy.HarmonicPotential(1.0), Dy.ClassicalPoint(0, 0), [0, 1], 0.0)


def test_pinned_chain_cm_follows_classical():
    model = build_model(SystemSpec(16, trap=TrapSpec.pinning(1.0), interaction=InteractionSpec("nearest", g=1.0),
                                   extent=15.0))
    rng = np.random.default_rng(11)
    x0, p0 = rng.normal(size=2)
    s = Dy.displace(ground_state(model), model, x0, p0)
    pot = Dy.cm_potential(model)
    mx0, mp0 = cm(s, model)
    t = np.linspace(0.0, 10.0, 101)
    traj = Dy.classical_trajectory(model.total_mass, pot, Dy.ClassicalPoint(mx0, mp0), t, 1e-4)
    q = np.array([cm(Dy.evolve_exact(model, s, tt), model) for tt in t])
    assert np.max(np.abs(q[:, 0] - traj.cm_mean_x)) <= 1e-6
    assert np.max(np.abs(q[:, 1] - traj.cm_mean_p)) <= 1e-6


def test_ehrenfest_ten_periods():
    model = build_model(SystemSpec(8, trap=TrapSpec.common(1.0), interaction=InteractionSpec("all", g=1.0)))
    T = 2 * math.pi
    t = np.linspace(0.0, 10 * T, 1001)
    cmp = Dy.ehrenfest_compare(model, Dy.ClassicalPoint(1.0, 0.0), t, 5e-5 * T)
    assert cmp.max_mean_deviation <= 1e-6
    assert cmp.var_x_constancy_defect <= 1e-12
    assert cmp.energy_shell_residual <= 1e-10
    assert cmp.total_energy_residual <= 1e-10


def test_ehrenfest_fixed_point():
    model = trap_model()
    t = np.linspace(0.0, 20.0, 201)
    cmp = Dy.ehrenfest_compare(model, Dy.ClassicalPoint(0.0, 0.0), t, 1e-2)
    assert cmp.max_mean_deviation <= 1e-14


def test_ehrenfest_deviation_is_second_order_in_dt():
    model = trap_model()
    t = np.linspace(0.0, 4 * math.pi, 201)
    start = Dy.ClassicalPoint(1.0, 0.5)
    e1 = Dy.ehrenfest_compare(model, start, t, 2e-3).max_mean_deviation
    e2 = Dy.ehrenfest_compare(model, start, t, 1e-3).max_mean_deviation
    assert math.log2(e1 / e2) == pytest.approx(2.0, abs=0.1)


def test_ehrenfest_rejects_pinning():
    model = build_model(SystemSpec(3, trap=TrapSpec.pinning(1.0)))
    with pytest.raises(UnsupportedScenarioError):
        Dy.ehrenfest_compare(model, Dy.ClassicalPoint(1, 0), [0, 1], 1e-3)


def test_trajectory_validation_and_csv(tmp_path):
    with pytest.raises(ValueError):
        Dy.Trajectory(np.array([0.0, 0.0]), np.zeros(2), np.zeros(2), np.zeros(2))
    with pytest.raises(ValueError):
        Dy.Trajectory(np.array([0.0, 1.0]), np.zeros(1), np.zeros(2), np.zeros(2))
    traj = Dy.Trajectory(np.array([0.0, 0.1]), np.array([1.0, 0.5]), np.zeros(2), np.ones(2), np.array([0.5, 0.5]))
    out = tmp_path / "t.csv"
    traj.to_csv(out)
    lines = out.read_text().splitlines()
    assert lines[0] == "t,x_cm,p_cm,energy,var_x"
    assert lines[2] == "0.10000000000000001,0.5,0,1,0.5"
