import math

import numpy as np
import pytest

from mixlab.errors import (ConfigInvalid, DepthBudgetExceeded, InsufficientData, JoinOvershoot,
                           NonpositiveRealPart, PreconditionViolated)
from mixlab.flow import (CorrelationSeries, TestFn, chi_modify, correlation_mc, correlation_quadrature,
                         decompose_correlation, fit_decay, laplace_numeric, suspension_integral)
from mixlab.groups import SU2
from mixlab.thermo import gibbs

from .conftest import GOLDEN, make_system


@pytest.fixture
def flat_system(full2):
    """Full 2-shift, r ≡ 1, Θ ≡ identity."""
    return make_system(full2)


def _gibbs(sys):
    return gibbs(sys.shift, sys.potential)


def _height(sys):
    return TestFn.character(sys.shift, sys.group, "torus:0", u_coeffs=(0.0, 1.0))


def test_suspension_integrals(golden_roof_system, golden_roof_gibbs):
    sys, g = golden_roof_system, golden_roof_gibbs
    assert suspension_integral(sys, g, TestFn.constant(sys.shift, sys.group)) == pytest.approx(1.0)
    expected = (1 + GOLDEN ** 2) / (2 * (1 + GOLDEN))
    assert suspension_integral(sys, g, _height(sys)) == pytest.approx(expected)
    xi = TestFn.character(sys.shift, sys.group, "torus:1")
    assert suspension_integral(sys, g, xi) == pytest.approx(0.0, abs=1e-14)


def test_height_correlation_on_flat_system(flat_system):
    E = _height(flat_system)
    series = correlation_quadrature(flat_system, _gibbs(flat_system), E, E, [0.0, 0.5, 1.0, 2.0])
    np.testing.assert_allclose(series.rho, [1 / 12, -1 / 24, 1 / 12, 1 / 12], atol=1e-12)
    assert series.estimator == "quadrature"


def test_rotation_correlation(golden_angle_system):
    sys = golden_angle_system
    xi = TestFn.character(sys.shift, sys.group, "torus:1")
    series = correlation_quadrature(sys, _gibbs(sys), xi, xi, [0, 1, 2, 3, 4])
    c = (1 + np.exp(2j * np.pi * GOLDEN)) / 2
    np.testing.assert_allclose(series.rho, c ** np.arange(5), atol=1e-12)


def test_depth_budget(golden_angle_system):
    sys = golden_angle_system
    xi = TestFn.character(sys.shift, sys.group, "torus:1")
    with pytest.raises(DepthBudgetExceeded):
        correlation_quadrature(sys, _gibbs(sys), xi, xi, [1.0, 20.0], x_depth_budget=10)
    with pytest.raises(PreconditionViolated):
        correlation_quadrature(sys, _gibbs(sys), xi, xi, [-1.0])


@pytest.mark.parametrize("seed", range(20))
def test_monte_carlo_agrees_with_quadrature(golden_angle_system, seed):
    sys = golden_angle_system
    g = _gibbs(sys)
    E = TestFn.character(sys.shift, sys.group, "torus:1") + _height(sys)
    t_grid = np.linspace(0.0, 9.5, 20)
    exact = correlation_quadrature(sys, g, E, E, t_grid)
    mc = correlation_mc(sys, g, E, E, t_grid, n_samples=5000, seed=seed)
    assert mc.estimator == "monte_carlo"
    within = np.abs(mc.rho - exact.rho) <= 3 * mc.error_bars + 1e-9
    assert within.mean() >= 0.95


def test_monte_carlo_is_independent_of_threads(golden_roof_system, golden_roof_gibbs):
    sys = golden_roof_system
    E = _height(sys)
    one = correlation_mc(sys, golden_roof_gibbs, E, E, [0.0, 1.0], 5000, seed=2, block_size=1024, threads=1)
    many = correlation_mc(sys, golden_roof_gibbs, E, E, [0.0, 1.0], 5000, seed=2, block_size=1024, threads=3)
    np.testing.assert_array_equal(one.rho, many.rho)
    with pytest.raises(PreconditionViolated):
        correlation_mc(sys, golden_roof_gibbs, E, E, [0.0], 999, seed=2)


def test_bands_add_up(golden_angle_system):
    sys = golden_angle_system
    g = _gibbs(sys)
    E = _height(sys) + TestFn.character(sys.shift, sys.group, "torus:1", u_coeffs=(1.0, -0.5))
    t_grid = [0.0, 0.7, 1.3, 2.0]
    total = correlation_quadrature(sys, g, E, E, t_grid)
    parts = decompose_correlation(sys, g, E, E, t_grid, weight_cutoff=1.0)
    assert list(parts) == ["torus:0", "torus:1"]
    np.testing.assert_allclose(sum(p.rho for p in parts.values()), total.rho, atol=1e-12)
    with pytest.raises(PreconditionViolated):
        decompose_correlation(sys, g, E, E, t_grid, weight_cutoff=0.5)


def test_distinct_bands_are_orthogonal(golden_angle_system):
    sys = golden_angle_system
    E = TestFn.character(sys.shift, sys.group, "torus:1")
    F = TestFn.character(sys.shift, sys.group, "torus:-1")
    series = correlation_quadrature(sys, _gibbs(sys), E, F, [0.0, 0.5, 3.0])
    np.testing.assert_allclose(series.rho, 0.0, atol=1e-12)


def test_test_function_algebra(full2, torus, rng):
    E = TestFn.character(full2, torus, "torus:1", u_coeffs=(1.0, 2.0), x_weights=[1.0, -1.0])
    doubled = E + E
    assert doubled.labels == ["torus:1"]
    idx = np.array([0, 1, 1])
    g = torus.random(3, rng)
    u = np.array([0.1, 0.2, 0.3])
    np.testing.assert_allclose(doubled.evaluate(idx, g, u), 2 * E.evaluate(idx, g, u))
    expected = np.array([1, -1, -1]) * (1 + 2 * u) * np.exp(1j * g[:, 0])
    np.testing.assert_allclose(E.evaluate(idx, g, u), expected)
    assert E.sup_bound(1.0) == pytest.approx(3.0)
    with pytest.raises(ConfigInvalid):
        E + TestFn.constant(full2, SU2())
    with pytest.raises(ConfigInvalid):
        TestFn.from_components(full2, torus, 1, {"torus:1": np.ones((3, 1, 1, 1))})


def test_mismatched_system(golden_angle_system, three_state, torus):
    foreign = TestFn.character(three_state, torus, "torus:1")
    with pytest.raises(ConfigInvalid):
        correlation_quadrature(golden_angle_system, _gibbs(golden_angle_system), foreign, foreign, [0.0])


def _exp_series(t_max=3.0, n=301, scale=0.3):
    t = np.linspace(0.0, t_max, n)
    return CorrelationSeries(t, scale * np.exp(-t), "quadrature")


def test_chi_join():
    series = _exp_series()
    chi = chi_modify(series, k2=1, sup_bound=0.3)
    t = series.t_grid
    assert complex(chi.join(0.0)) == pytest.approx(0.0, abs=1e-14)
    assert complex(chi.join(0.0, 1)) == pytest.approx(0.0, abs=1e-14)
    assert complex(chi.join(1.0)) == pytest.approx(0.3 * math.exp(-1), abs=1e-4)
    assert complex(chi.join(1.0, 1)) == pytest.approx(-0.3 * math.exp(-1), abs=2e-3)
    assert chi.series.rho[0] == 0.0
    np.testing.assert_allclose(chi.series.rho[t >= 1.0], series.rho[t >= 1.0])
    assert len(chi.derivative_ratios) == 2


SMOOTHSTEPS = {
    1: lambda s: 3 * s ** 2 - 2 * s ** 3,
    2: lambda s: 10 * s ** 3 - 15 * s ** 4 + 6 * s ** 5,
}


@pytest.mark.parametrize("k2", [1, 2])
def test_chi_join_of_a_constant_is_a_smoothstep(k2):
    c = 0.3
    t = np.linspace(0.0, 3.0, 301)
    chi = chi_modify(CorrelationSeries(t, np.full(len(t), c), "quadrature"), k2=k2, sup_bound=c)
    s = np.array([0.1, 0.25, 0.5, 0.75, 0.9])
    np.testing.assert_allclose(chi.join(s), c * SMOOTHSTEPS[k2](s), atol=1e-9)
    for j in range(k2 + 1):
        assert complex(chi.join(0.0, j)) == pytest.approx(0.0, abs=1e-12)
    # |χ'| ≤ 2c on [0, 1]
    assert chi.derivative_ratios[0] == pytest.approx(1.0, abs=1e-9)
    assert chi.derivative_ratios[1] <= 1.0
    if k2 == 1:
        assert chi.derivative_ratios[1] == pytest.approx(0.75, abs=1e-6)


def test_chi_join_on_a_shorter_interval_is_steeper():
    c = 0.3
    t = np.linspace(0.0, 3.0, 301)
    chi = chi_modify(CorrelationSeries(t, np.full(len(t), c), "quadrature"), k2=1, sup_bound=c, join_start=0.5)
    np.testing.assert_allclose(chi.series.rho[t <= 0.5], 0.0, atol=1e-12)
    assert chi.derivative_ratios[1] == pytest.approx(1.5, abs=1e-6)
    with pytest.raises(PreconditionViolated):
        chi_modify(CorrelationSeries(t, np.full(len(t), c), "quadrature"), k2=1, join_start=1.0)


def test_chi_join_of_zero_is_zero():
    t = np.linspace(0.0, 3.0, 301)
    chi = chi_modify(CorrelationSeries(t, np.zeros(len(t)), "quadrature"), k2=2)
    np.testing.assert_array_equal(chi.series.rho, 0.0)
    assert chi.derivative_ratios == (0.0, 0.0, 0.0)


def test_chi_join_enforces_sup_bound():
    with pytest.raises(JoinOvershoot):
        chi_modify(_exp_series(), k2=1, sup_bound=0.05)


def test_chi_join_needs_samples():
    coarse = CorrelationSeries([0.0, 1.0, 2.0], [0.1, 0.1, 0.1], "quadrature")
    with pytest.raises(PreconditionViolated):
        chi_modify(coarse, k2=2)


def test_laplace_transform():
    t = np.linspace(0.0, 20.0, 2001)
    series = CorrelationSeries(t, np.exp(-t), "quadrature")
    values = laplace_numeric(series, [1.0, 2.0 + 3.0j])
    assert values[1.0 + 0j].value == pytest.approx(0.5, abs=1e-7)
    assert values[2.0 + 3.0j].value == pytest.approx(1 / (3.0 + 3.0j), abs=1e-7)
    assert values[1.0 + 0j].tail_bound == pytest.approx(math.exp(-20.0))
    with pytest.raises(NonpositiveRealPart):
        laplace_numeric(series, [0.0])
    with pytest.raises(InsufficientData):
        laplace_numeric(CorrelationSeries([0.0, 1.0], [1.0, 1.0], "quadrature"), [1.0])


def test_decay_fits():
    t = np.linspace(1.0, 50.0, 100)
    power = fit_decay(CorrelationSeries(t, 2.0 * t ** -3.0, "quadrature"), t_min=1.0)
    assert power.model == "power"
    assert power.order_or_rate == pytest.approx(3.0)
    assert power.constant == pytest.approx(2.0)
    assert power.r2 == pytest.approx(1.0)
    expo = fit_decay(CorrelationSeries(t, np.exp(-0.5 * t), "quadrature"), t_min=1.0)
    assert expo.model == "exponential"
    assert expo.order_or_rate == pytest.approx(0.5)


def test_decay_fit_on_non_decaying_series():
    t = np.linspace(1.0, 50.0, 100)
    flat = fit_decay(CorrelationSeries(t, np.full(len(t), 0.1), "monte_carlo"), t_min=5.0)
    assert flat.order_or_rate == pytest.approx(0.0, abs=1e-9)
    with pytest.raises(InsufficientData):
        fit_decay(CorrelationSeries(t[:5], np.ones(5), "quadrature"), t_min=1.0)


def test_series_rejects_unknown_estimator():
    with pytest.raises(ConfigInvalid):
        CorrelationSeries([0.0], [0.0], "exact")
