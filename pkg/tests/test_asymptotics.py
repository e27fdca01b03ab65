import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cmlimit import asymptotics as A
from cmlimit.errors import InsufficientDataError, InvalidArgumentError, SingularModelError
from cmlimit.model import InteractionSpec, SystemSpec, TrapSpec

INDEPENDENT = SystemSpec(1, trap=TrapSpec.pinning(1.0), scaling_preset="assumption-preserving")


def test_fit_power_law_exact():
    n = np.array([10, 100, 1000])
    exp, pref, r2 = A.fit_power_law(n, 3.0 / n)
    assert exp == pytest.approx(-1.0, abs=1e-12)
    assert pref == pytest.approx(3.0, rel=1e-12)
    assert r2 == pytest.approx(1.0, abs=1e-12)
    assert A.fit_power_law(n, [2.0, 2.0, 2.0])[0] == pytest.approx(0.0, abs=1e-12)


def test_fit_power_law_needs_three_positive():
    with pytest.raises(InsufficientDataError):
        A.fit_power_law([1, 2, 3], [1.0, 0.0, 2.0])
    with pytest.raises(InsufficientDataError):
        A.fit_power_law([1, 2], [1.0, 2.0])


def test_independent_sweep_is_one_over_n():
    res = A.localization_sweep(INDEPENDENT, [16, 64, 256, 1024])
    sigma2 = 0.5  # hbar / (2 sqrt(k m)) with k m = 1 under the preset
    for n, o in zip(res.n_values, res.observations):
        assert o.var_x == pytest.approx(sigma2 / n, rel=1e-12)
    assert res.series["var_x"].fit_exponent == pytest.approx(-1.0, abs=1e-9)


def test_common_trap_sweep_flat():
    tmpl = SystemSpec(1, trap=TrapSpec.common(1.0), interaction=InteractionSpec("all", g=1.0))
    res = A.localization_sweep(tmpl, [8, 16, 32, 64])
    for o in res.observations:
        assert o.var_x == pytest.approx(0.5, rel=1e-10)
    assert abs(res.series["var_x"].fit_exponent) <= 0.01


def test_coupled_sweep_exponent():
    tmpl = SystemSpec(1, trap=TrapSpec.pinning(1.0), interaction=InteractionSpec("nearest", g=1.0),
                      scaling_preset="assumption-preserving", extent=100.0)
    res = A.localization_sweep(tmpl, [16, 64, 256, 1024])
    assert res.series["var_x"].fit_exponent == pytest.approx(-1.0, abs=0.05)
    assert res.series["gap4"].fit_exponent == pytest.approx(-2.0, abs=0.1)


def test_sweep_threads_identical():
    tmpl = SystemSpec(1, trap=TrapSpec.pinning(1.0), interaction=InteractionSpec("nearest", g=1.0),
                      scaling_preset="assumption-preserving", extent=10.0)
    a = A.localization_sweep(tmpl, [8, 32, 300, 600], threads=1)
    b = A.localization_sweep(tmpl, [8, 32, 300, 600], threads=4)
    assert [o.var_x for o in a.observations] == [o.var_x for o in b.observations]


def test_sweep_errors():
    with pytest.raises(InvalidArgumentError):
        A.localization_sweep(INDEPENDENT, [16, 8])
    with pytest.raises(SingularModelError, match="n=4"):
        A.localization_sweep(SystemSpec(1, interaction=InteractionSpec("nearest", g=1.0)), [4, 8])


def test_commutator_examples():
    r = A.commutator_suppression(2, 100)
    assert r.magnitude == pytest.approx(0.02, rel=1e-15)
    assert r.difference <= 1e-14
    assert A.commutator_suppression(7, 7, hbar=1.3).magnitude == pytest.approx(1.3, rel=1e-15)
    with pytest.raises(InvalidArgumentError):
        A.commutator_suppression(0, 3)
    with pytest.raises(InvalidArgumentError):
        A.commutator_suppression(4, 3)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 50), st.integers(0, 10**6))
def test_commutator_closed_form_matches_direct(k, seed):
    rng = np.random.default_rng(seed)
    n = k + int(rng.integers(0, 200))
    r = A.commutator_suppression(k, n, bare_masses=rng.uniform(0.1, 5, n), total_mass=2.0)
    assert r.difference <= 1e-14


def test_commutator_scales_inverse_n():
    mags = [A.commutator_suppression(3, n).magnitude * n for n in (100, 1000, 10000)]
    assert max(mags) - min(mags) <= 1e-14 * max(mags)


def test_strong_distance_examples(reference):
    assert A.strong_convergence_distance(A.TailSpec.constant(0.5, 0), 1.0, 0) == 0.0
    d2 = A.strong_convergence_distance(A.TailSpec.constant(0.5, 10), 1.0, 0)
    assert d2 == pytest.approx(reference["strong_distance_const_half_10"], rel=1e-12)


def test_strong_distance_summable_tail_monotone():
    tail = A.TailSpec.geometric(200)
    d2 = [A.strong_convergence_distance(tail, 1.0, s) for s in range(60)]
    assert all(b <= a for a, b in zip(d2, d2[1:]))
    assert d2[30] < 1e-6
    assert all(0.0 <= v <= 4.0 for v in d2)


@settings(max_examples=40, deadline=None)
@given(st.floats(-2, 2), st.floats(0, 2), st.integers(0, 30), st.floats(0.1, 3))
def test_strong_distance_against_mpmath(mean, var, length, beta):
    import mpmath as mp

    mp.mp.dps = 30
    tail = A.TailSpec.constant(var, length, mean)
    a = -mp.mpf(beta) ** 2 * var * length / 2
    b = mp.mpf(beta) * mean * length
    exact = 2 - 2 * mp.exp(a) * mp.cos(b)
    assert A.strong_convergence_distance(tail, beta, 0) == pytest.approx(float(exact), rel=1e-12, abs=1e-15)


def test_norm_supremum(reference):
    assert A.norm_distance_supremum(0.0, 37, 1.0) == 2.0
    assert A.norm_distance_supremum(0.5, 100, 1.0) == pytest.approx(reference["norm_sup_half_100"], rel=1e-14)
    for s2 in (0.0, 0.1, 1.0, 10.0):
        assert 0.0 <= A.norm_distance_supremum(s2, 10, 1.0) <= 2.0
    with pytest.raises(InvalidArgumentError):
        A.norm_distance_supremum(0.1, 0, 1.0)


def test_norm_search_reaches_closed_form():
    d, mean, s2 = A.norm_distance_search(50, 1.0, s2_max=1.0)
    assert d == pytest.approx(2.0, abs=1e-6)
    assert s2 == pytest.approx(0.0, abs=1e-6)
    assert mean * 50 == pytest.approx(math.pi, rel=1e-4)


def test_finite_volume_examples(reference):
    b = A.finite_volume_bound(100, 0.5, 1.0, 1.0)
    assert b.log_paper_bound == pytest.approx(reference["log_bound_n100_half_gd1"], rel=1e-12)
    assert b.paper_bound == pytest.approx(reference["bound_n100_half_gd1"], rel=1e-12)
    assert b.exact_binomial_tail == pytest.approx(reference["exact_tail_n100_half_gd1"], rel=1e-10)
    loose = A.finite_volume_bound(100, 0.5, 1.0, 0.1)
    assert loose.paper_bound == pytest.approx(reference["bound_n100_half_gd01"], rel=1e-12)
    assert loose.paper_bound > 1.0 and loose.exact_binomial_tail <= 1.0
    assert A.finite_volume_bound(100, 1e-9, 1.0, 1.0).exact_binomial_tail == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 20000), st.floats(0.01, 0.99), st.floats(0.0, 20.0))
def test_finite_volume_tail_in_unit_interval(n, beta_frac, gd):
    b = A.finite_volume_bound(n, beta_frac, 1.0, gd)
    assert 0.0 <= b.exact_binomial_tail <= 1.0
    assert math.isfinite(b.log_paper_bound)


def test_finite_volume_rejects():
    for args in [(0, 0.5, 1, 1), (10, 0.0, 1, 1), (10, 1.0, 1, 1), (10, 0.5, 0, 1), (10, 0.5, 1, -1)]:
        with pytest.raises(InvalidArgumentError):
            A.finite_volume_bound(*args)
