import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from conftest import constant_set
from spousepension import ConstantRate, GridSpec, MortalitySurface, solve_marital
from spousepension.intensities import ExponentialImprovement, GompertzMakeham, PiecewiseLinearRate
from spousepension.payments import PolicySpec
from spousepension.simulator import (
    SpouseDeathSampler,
    check_path,
    estimate_marital,
    estimate_policy_value,
    estimate_policy_values,
    iter_paths,
    sample_time_from_hazard,
    simulate_path,
)
from spousepension.survival import spouse_survival
from spousepension.valuation import ShortRate

Q2 = MortalitySurface(ConstantRate(value=0.02, t_max=300.0))


def test_zero_rate_never_fires():
    rng = np.random.default_rng(1)
    out = sample_time_from_hazard(ConstantRate(value=0.0), 0.0, rng, size=100)
    assert np.all(np.isinf(out))


def test_constant_rate_mean():
    rng = np.random.default_rng(2)
    draws = sample_time_from_hazard(ConstantRate(value=0.1, t_max=500.0), 0.0, rng, size=1_000_000)
    assert abs(draws.mean() - 10.0) < 0.03


def test_piecewise_rate_distribution():
    curve = PiecewiseLinearRate(knots=((0.0, 0.05), (20.0, 0.3), (40.0, 0.1)), t_max=200.0)
    rng = np.random.default_rng(3)
    draws = sample_time_from_hazard(curve, 5.0, rng, size=200_000)
    assert np.all(draws >= 5.0)

    def cdf(x):
        x = np.asarray(x)
        return 1.0 - np.exp(-(curve.cumulative(np.clip(x, 5.0, 200.0)) - curve.cumulative(5.0)))

    assert stats.kstest(draws, cdf).statistic < 0.005


def test_unmarried_population():
    est = estimate_marital(constant_set(gamma=0.0), 5000, t_max=50.0, g_times=(10.0, 40.0), seed=4)
    assert est.max_marriages == 0 and np.all(est.g == 0.0)
    np.testing.assert_array_equal(est.single_layers[0], 1.0)
    assert all(not h.available for h in estimate_marital(constant_set(gamma=0.0), 100, t_max=50.0,
                                                         f_times=(10.0,), seed=4).f.values())


def test_paths_follow_transition_graph(full_set):
    for path in iter_paths(full_set, 3000, seed=5, t_max=80.0, block_size=1000):
        check_path(path)


@given(st.integers(0, 2**32 - 1), st.floats(0.01, 0.5), st.floats(0.0, 0.5), st.floats(0.0, 0.2))
def test_random_paths_are_valid(seed, gamma, sigma, q):
    path = simulate_path(constant_set(gamma=gamma, sigma=sigma, q=q), seed, t_max=100.0)
    check_path(path)
    assert path.state_at(-1.0) == "s0"


def test_same_seed_same_path(full_set):
    a = simulate_path(full_set, 99)
    b = simulate_path(full_set, 99)
    assert a == b
    assert simulate_path(full_set, 100) != a


def test_without_exits_at_most_one_marriage(toy_set):
    paths = list(iter_paths(toy_set, 2000, seed=6, t_max=100.0))
    assert max(len(p.events) for p in paths) == 1
    assert all(p.exit_causes == [] for p in paths)


def test_marriage_fraction_toy(toy_set):
    est = estimate_marital(toy_set, 1_000_000, t_max=30.0, g_times=(10.0,), seed=7)
    # g(10) = 1 - e^{-1}; binomial standard error about 0.00048
    assert abs(est.g[0] - 0.6321205588285577) < 3 * 0.00048


def test_repeat_marriages_match_layer_masses(full_set):
    grid = GridSpec(0.05, 40.0, 90.0)
    sol = solve_marital(full_set, grid)
    i = grid.index_of(40.0)
    analytic = sum(layer.mass[i] + layer.u[i] for layer in sol.layers[1:])
    est = estimate_marital(full_set, 1_000_000, t_max=40.0, g_times=(40.0,), seed=8)
    mc = est.married_layers[1:, 0].sum() + est.single_layers[2:, 0].sum()
    se = math.sqrt(analytic * (1 - analytic) / 1_000_000)
    assert abs(mc - analytic) < 3 * se


def test_policy_values_scale_and_vanish(full_set):
    rate = ShortRate.constant(0.03)
    pol = PolicySpec("lifelong", q_ad=Q2)
    est = estimate_policy_value(constant_set(gamma=0.0), pol, rate, 5000, t_max=60.0, seed=9)
    assert est.mean == 0.0 and est.se == 0.0
    one, two = estimate_policy_values(full_set, [pol, PolicySpec("lifelong", amount=2.0, q_ad=Q2)], rate,
                                      20_000, t_max=60.0, seed=9)
    assert two.mean == pytest.approx(2 * one.mean, rel=1e-13)
    assert two.se == pytest.approx(2 * one.se, rel=1e-10)


def test_results_independent_of_threads(full_set):
    kw = dict(t_max=60.0, g_times=(20.0, 40.0), f_times=(40.0,), seed=10, block_size=4096)
    a = estimate_marital(full_set, 20_000, threads=1, **kw)
    b = estimate_marital(full_set, 20_000, threads=3, **kw)
    np.testing.assert_array_equal(a.g, b.g)
    np.testing.assert_array_equal(a.f[40.0].density, b.f[40.0].density)
    pols = [PolicySpec("lifelong", q_ad=Q2), PolicySpec("lump_sum", c=65.0, q_ad=Q2)]
    rate = ShortRate.constant(0.03)
    p1 = estimate_policy_values(full_set, pols, rate, 20_000, t_max=60.0, seed=10, threads=1, block_size=4096)
    p3 = estimate_policy_values(full_set, pols, rate, 20_000, t_max=60.0, seed=10, threads=3, block_size=4096)
    assert [(e.mean, e.se) for e in p1] == [(e.mean, e.se) for e in p3]


def test_standard_error_shrinks_with_paths(full_set):
    pol = PolicySpec("lifelong", q_ad=Q2)
    rate = ShortRate.constant(0.03)
    small = estimate_policy_value(full_set, pol, rate, 10_000, t_max=60.0, seed=11)
    big = estimate_policy_value(full_set, pol, rate, 40_000, t_max=60.0, seed=12)
    assert 0.4 < big.se / small.se < 0.6


def test_spouse_death_with_improvement():
    surface = MortalitySurface(GompertzMakeham(alpha=0.0005, beta=0.00007, growth=0.09, t_max=200.0),
                               ExponentialImprovement(0.01))
    sampler = SpouseDeathSampler(surface, t_max=80.0)
    n = 400_000
    rng = np.random.default_rng(13)
    start, age = 10.0, 50.0
    death = sampler.sample(np.full(n, start), np.full(n, age), rng.standard_exponential(n))
    for t in (20.0, 40.0, 60.0):
        p = spouse_survival(surface, start, t, age + t - start)
        se = math.sqrt(p * (1 - p) / n)
        assert abs((death > t).mean() - p) < 4 * se
