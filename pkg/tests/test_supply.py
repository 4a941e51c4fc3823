import math

import numpy as np
import pytest

from RTBContracts.errors import ParameterError, SupplyExceededError
from RTBContracts.supply import (SupplySlice, TimeVaryingSupplyCurve, combine_curves, load_curve, save_curve)


def linear_slice():
    # W(x) = x on [0, 10]
    grid = np.linspace(0.0, 10.0, 11)
    return SupplySlice(grid, grid)


def sinusoidal_curve(phase=0.0, base=10.0, name=None):
    grid_x = np.linspace(0.0, 20.0, 81)
    knots = np.arange(24.0)
    lam = base * (1.0 + 0.5 * np.sin(2 * np.pi * (knots - phase) / 24.0))
    scale = 5.0 * (1.0 - 0.3 * np.sin(2 * np.pi * (knots - phase) / 24.0))
    win = np.stack([-np.expm1(-grid_x / s) for s in scale])
    return TimeVaryingSupplyCurve(grid_x, knots, win, lam, period_hours=24.0, name=name)


def test_slice_cost_and_inverse():
    w = linear_slice()
    xs = np.array([0.0, 1.5, 4.0, 9.0])
    assert np.allclose(w.eval(xs), xs)
    assert np.allclose(w.integral(xs), xs ** 2 / 2)
    assert np.allclose(w.cost(xs), xs ** 2 / 2)
    assert np.allclose(w.invert(np.array([0.5, 3.0, 7.25])), [0.5, 3.0, 7.25])


def test_acquisition_and_derivative():
    w = linear_slice()
    lam, slope = w.acquisition(4.0)
    assert lam == pytest.approx(8.0)
    assert slope == pytest.approx(4.0)


def test_zero_bid_costs_nothing():
    grid = np.linspace(-2.0, 10.0, 13)
    w = SupplySlice(grid, np.clip(grid + 2.0, 0.0, None))
    assert w.zero_level == pytest.approx(2.0)
    assert w.cost(0.0) == 0.0
    lam, slope = w.acquisition(1.0)
    assert lam == 0.0
    assert slope == 0.0


def test_invert_beyond_capacity():
    w = linear_slice()
    with pytest.raises(SupplyExceededError):
        w.invert(10.5)
    assert w.invert(10.0 + 1e-12) == pytest.approx(10.0)


def test_slice_validation():
    with pytest.raises(ParameterError):
        SupplySlice([0.0, 0.0, 1.0], [0.0, 1.0, 2.0])
    with pytest.raises(ParameterError):
        SupplySlice([0.0, 1.0], [0.0, np.nan])


def test_slice_projects_onto_monotone_envelope():
    w = SupplySlice([0.0, 1.0, 2.0, 3.0], [0.0, 2.0, 1.0, 3.0])
    assert np.all(np.diff(w.values) >= 0)
    assert w.eval(2.0) == pytest.approx(2.0)


def random_aggregates(rng, n):
    for _ in range(n):
        curve = sinusoidal_curve(phase=rng.uniform(0.0, 24.0), base=rng.uniform(2.0, 20.0))
        t0 = rng.uniform(0.0, 24.0)
        yield curve.aggregate(t0, t0 + rng.uniform(0.5, 30.0))


def test_acquisition_is_convex(rng):
    checks = 0
    for agg in random_aggregates(rng, 10):
        triples = np.sort(rng.uniform(0.0, 0.99 * agg.capacity, (100, 3)), axis=1)
        lam = np.stack([agg.acquisition(triples[:, m])[0] for m in range(3)], axis=1)
        spread = np.maximum(triples[:, 2] - triples[:, 0], 1e-300)
        chord = lam[:, 0] + (lam[:, 2] - lam[:, 0]) * (triples[:, 1] - triples[:, 0]) / spread
        assert np.all(lam[:, 1] <= chord + 1e-9 * np.maximum(1.0, lam[:, 2]))
        checks += len(triples)
    assert checks == 1000


def test_acquisition_derivative_is_inverse(rng):
    checks = 0
    for agg in random_aggregates(rng, 10):
        s = rng.uniform(agg.zero_level, 0.9 * agg.capacity, 100)
        h = 1e-6 * agg.capacity
        numeric = (agg.acquisition(s + h)[0] - agg.acquisition(s - h)[0]) / (2 * h)
        assert np.max(np.abs(numeric - agg.invert(s))) <= 1e-4
        assert np.allclose(agg.acquisition(s)[1], agg.invert(s))
        checks += len(s)
    assert checks == 1000


def test_rate_interpolates_knots():
    curve = sinusoidal_curve()
    assert np.allclose(curve.rate_at(curve.grid_t), curve.lam)
    assert curve.rate_at(24.0 + 3.0) == pytest.approx(curve.lam[3])


def test_aggregate_additive_and_periodic():
    curve = sinusoidal_curve()
    whole = curve.aggregate(0.0, 24.0).values
    parts = curve.aggregate(0.0, 9.5).values + curve.aggregate(9.5, 24.0).values
    assert np.allclose(whole, parts)
    assert np.allclose(curve.aggregate(24.0, 48.0).values, whole)
    # daily mean rate is the base rate
    assert curve.aggregate(0.0, 24.0).capacity == pytest.approx(24 * 10.0 * (1 - np.exp(-4.0)), rel=0.05)


def test_average_is_scaled_aggregate():
    curve = sinusoidal_curve()
    assert np.allclose(curve.average(2.0, 6.0).values, curve.aggregate(2.0, 6.0).values / 4.0)


def test_aggregate_rejects_empty_window():
    with pytest.raises(ParameterError):
        sinusoidal_curve().aggregate(3.0, 3.0)


def test_shifted_clock():
    curve = sinusoidal_curve()
    moved = curve.shifted(5.0)
    assert moved.rate_at(0.0) == pytest.approx(curve.rate_at(5.0))
    assert np.allclose(moved.aggregate(0.0, 10.0).values, curve.aggregate(5.0, 15.0).values, rtol=1e-3, atol=1e-6)


def test_constant_curve_aggregate():
    grid = np.linspace(0.0, 10.0, 101)
    curve = TimeVaryingSupplyCurve(grid, [0.0], grid / 10.0, [5.0])
    assert np.allclose(curve.aggregate(0.0, 2.0).values, grid)


def test_curve_validation():
    grid = np.linspace(0.0, 1.0, 5)
    with pytest.raises(ParameterError):
        TimeVaryingSupplyCurve(grid, [0.0], grid[::-1], [1.0])
    with pytest.raises(ParameterError):
        TimeVaryingSupplyCurve(grid, [0.0], grid, [-1.0])
    with pytest.raises(ParameterError):
        TimeVaryingSupplyCurve(grid, [0.0, 25.0], np.stack([grid, grid]), [1.0, 1.0], period_hours=24.0)


def test_combine_curves_adds_rates():
    a, b = sinusoidal_curve(0.0, 10.0), sinusoidal_curve(6.0, 4.0)
    both = combine_curves([a, b], name='a,b')
    for t in (0.0, 7.0, 13.0):
        assert np.allclose(both.slice(t).values, a.slice(t).values + b.slice(t).values)
    assert both.name == 'a,b'


def test_curve_file_round_trip(tmp_path):
    curve = sinusoidal_curve(name='3')
    path = tmp_path / 'curves' / '3.json'
    save_curve(curve, str(path))
    loaded = load_curve(str(path))
    assert loaded.name == '3'
    assert loaded.period_hours == 24.0
    assert np.allclose(loaded.aggregate(1.0, 30.0).values, curve.aggregate(1.0, 30.0).values)


def test_pointwise_curve_functions():
    from RTBContracts.supply.SupplyCurve import acquisition_cost, eval_W, expected_cost, invert_W, supply_bound

    grid = np.linspace(0.0, 10.0, 11)
    curve = TimeVaryingSupplyCurve(grid, [0.0], grid / 10.0, [4.0])
    assert eval_W(curve, 5.0, 3.0) == pytest.approx(2.0)
    assert invert_W(curve, 2.0, 3.0) == pytest.approx(5.0)
    assert expected_cost(curve, 5.0, 3.0) == pytest.approx(5.0)
    lam, slope = acquisition_cost(curve, 2.0, 3.0)
    assert lam == pytest.approx(5.0) and slope == pytest.approx(5.0)
    assert supply_bound(curve, 7.0) == pytest.approx(4.0)


def test_market_distribution_survives_shift_combine_and_file(tmp_path):
    from RTBContracts.estimation import build_periodic_curve

    grid = np.linspace(0.0, 40.0, 161)
    a = build_periodic_curve(np.full(24, 10.0), np.tile(-np.expm1(-grid / 5.0), (24, 1)), grid, 1.0, name='a')
    b = build_periodic_curve(np.full(24, 30.0), np.tile(-np.expm1(-grid / 9.0), (24, 1)), grid, 1.0, name='b')
    both = combine_curves([a, b], name='a,b')
    mixture = (10.0 * -np.expm1(-grid / 5.0) + 30.0 * -np.expm1(-grid / 9.0)) / 40.0
    assert np.allclose(both.market.win_prob_at(4.0), mixture)
    assert both.price_curve is both.market

    moved = both.shifted(5.0)
    assert np.allclose(moved.market.win_prob_at(0.0), both.market.win_prob_at(5.0))

    path = tmp_path / 'ab.json'
    save_curve(both, str(path))
    loaded = load_curve(str(path))
    assert np.allclose(loaded.market.grid_x, grid)
    assert np.allclose(loaded.market.win_prob, both.market.win_prob)
    assert loaded.sigma == 1.0 and loaded.market.sigma == 0.0


def test_market_curve_must_be_unsmoothed():
    grid = np.linspace(0.0, 1.0, 5)
    smoothed = TimeVaryingSupplyCurve(grid, [0.0], grid, [1.0], sigma=0.5)
    with pytest.raises(ParameterError):
        TimeVaryingSupplyCurve(grid, [0.0], grid, [1.0], sigma=0.5, market=smoothed)


def exponential_curve(points=20001):
    # W(x) = 1 - exp(-x) at rate 1 on [0, 20]
    grid = np.linspace(0.0, 20.0, points)
    return TimeVaryingSupplyCurve(grid, [0.0], -np.expm1(-grid), [1.0])


def test_exponential_closed_forms():
    from RTBContracts.supply.SupplyCurve import acquisition_cost, expected_cost, invert_W

    curve = exponential_curve()
    assert invert_W(curve, 0.5, 2.0) == pytest.approx(math.log(2.0), abs=1e-6)
    # f(x) = 1 - (1 + x) exp(-x)
    assert expected_cost(curve, 1.0, 2.0) == pytest.approx(1.0 - 2.0 * math.exp(-1.0), abs=1e-6)
    assert expected_cost(curve, 0.0, 2.0) == 0.0
    # Lambda(s) = (1 - s) ln(1 - s) + s
    lam, slope = acquisition_cost(curve, 0.5, 2.0)
    assert lam == pytest.approx(0.5 * math.log(0.5) + 0.5, abs=1e-6)
    assert slope == pytest.approx(math.log(2.0), abs=1e-6)
    assert acquisition_cost(curve, 0.0, 2.0)[0] == 0.0


def test_aggregate_of_sinusoidal_rate():
    grid = np.linspace(0.0, 20.0, 401)
    knots = np.linspace(0.0, 2 * np.pi, 257)
    curve = TimeVaryingSupplyCurve.from_function(grid, knots, lambda x, t: -np.expm1(-x),
                                                 lambda t: 1.0 + math.sin(t), quad_step=0.01)
    agg = curve.aggregate(0.0, 2 * np.pi)
    assert np.allclose(agg.values, 2 * np.pi * -np.expm1(-grid), rtol=1e-3, atol=1e-3)


def test_aggregate_cost_marginal_price_is_the_bid():
    agg = sinusoidal_curve().aggregate(2.0, 9.0)
    x = agg.grid_x
    dw = np.diff(agg.values)
    df = np.diff(agg.cost(x))
    live = dw > 1e-8 * agg.capacity
    assert live.sum() > 10
    assert np.allclose(df[live] / dw[live], ((x[1:] + x[:-1]) / 2)[live], atol=1e-3)
