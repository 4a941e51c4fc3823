import json
import math

import numpy as np
import pytest

from RTBContracts.errors import ConfigurationError, ParameterError
from RTBContracts.horizon import RecedingHorizonController
from RTBContracts.simulator import (EmpiricalSampler, PlanBidder, SyntheticSampler, normalize, run, summary,
                                    synthetic_sampler, write_result)
from RTBContracts.supply import TimeVaryingSupplyCurve
from RTBContracts.targeting import Contract, decompose

GRID = np.linspace(0.0, 100.0, 1001)


def exponential_cdf(scale):
    return lambda t: -np.expm1(-GRID / scale)


def constant_sampler(rate=100.0, scale=10.0, n_types=1, span=(0.0, 24.0)):
    return SyntheticSampler([lambda t: rate] * n_types, [exponential_cdf(scale)] * n_types, GRID, span)


class FixedBidder:
    """Bids a constant and credits every win to contract 0."""

    def __init__(self, value):
        self.value = value
        self.wins = []

    def bid(self, t, j):
        return self.value

    def win(self, t, j, price):
        self.wins.append((t, price))
        return 0


class BrokenBidder(FixedBidder):
    def bid(self, t, j):
        if t > 1.0:
            raise RuntimeError('lost connection')
        return self.value


def test_poisson_arrival_count():
    sampler = constant_sampler(rate=100.0)
    rng = np.random.default_rng(0)
    t, n = 0.0, 0
    while True:
        dt, _ = sampler.sample_event(t, 0, rng)
        t += dt
        if t >= 10.0:
            break
        n += 1
    assert 1000 - 4 * math.sqrt(1000) < n < 1000 + 4 * math.sqrt(1000)


def test_thinning_follows_rate_profile():
    def rate(t):
        return 50.0 * (1.0 + 0.8 * math.sin(2 * math.pi * t / 24.0))

    sampler = SyntheticSampler([rate], [exponential_cdf(10.0)], GRID, None, period_hours=24.0)
    rng = np.random.default_rng(1)
    times, t = [], 0.0
    while t < 240.0:
        t += sampler.sample_interarrival(t, 0, rng)
        times.append(t % 24.0)
    times = np.array(times)
    peak = np.sum((times >= 5.0) & (times < 7.0))
    trough = np.sum((times >= 17.0) & (times < 19.0))
    # expected 10 * 2 * 50 * (1 +- 0.8 * ~0.98)
    assert peak > 3 * trough


def test_price_distribution():
    sampler = constant_sampler(scale=10.0)
    rng = np.random.default_rng(2)
    prices = np.array([sampler.sample_price(1.0, 0, rng) for _ in range(20000)])
    for x in (2.0, 10.0, 30.0):
        assert np.mean(prices <= x) == pytest.approx(1 - math.exp(-x / 10.0), abs=0.015)


def test_price_mass_above_grid():
    sampler = SyntheticSampler([lambda t: 1.0], [lambda t: 0.5 * GRID / GRID[-1]], GRID, (0.0, 1.0))
    rng = np.random.default_rng(3)
    prices = np.array([sampler.sample_price(0.5, 0, rng) for _ in range(4000)])
    high = prices == 2.0 * GRID[-1]
    assert high.mean() == pytest.approx(0.5, abs=0.04)
    assert np.all(prices[~high] <= GRID[-1])


def test_synthetic_sampler_validation():
    with pytest.raises(ConfigurationError):
        SyntheticSampler([lambda t: 0.0], [exponential_cdf(1.0)], GRID, (0.0, 1.0))
    with pytest.raises(ParameterError):
        SyntheticSampler([lambda t: 1.0], [exponential_cdf(1.0)], GRID, (1.0, 1.0))
    with pytest.raises(ConfigurationError):
        synthetic_sampler([])


def test_empirical_hour_interpolation():
    gaps = [[np.array([1.0])] * 24]
    prices = [[np.array([float(h)]) for h in range(24)]]
    sampler = EmpiricalSampler(gaps, prices)
    rng = np.random.default_rng(4)
    draws = np.array([sampler.sample_event(3.25, 0, rng)[1] for _ in range(8000)])
    assert set(np.unique(draws)) <= {3.0, 4.0}
    assert np.mean(draws == 4.0) == pytest.approx(0.25, abs=0.02)
    assert sampler.hour_for(23.9999999, np.random.default_rng(0)) in (23, 0)


def test_empirical_sampler_validation():
    good = [np.array([1.0])] * 24
    with pytest.raises(ConfigurationError):
        EmpiricalSampler([good[:23]], [good[:23]])
    with pytest.raises(ConfigurationError):
        EmpiricalSampler([[np.array([])] + good[1:]], [good])
    with pytest.raises(ConfigurationError):
        EmpiricalSampler([[np.array([0.0])] + good[1:]], [good])
    with pytest.raises(ConfigurationError):
        EmpiricalSampler([good], [[np.array([-1.0])] + good[1:]])


def test_second_price_settlement():
    contracts = [Contract(1, 24.0, 10.0, {'a'})]
    bidder = FixedBidder(10.0)
    result = run(constant_sampler(), bidder, 5.0, seed=11, contracts=contracts)
    won = [e for e in result.events if e.won]
    lost = [e for e in result.events if not e.won]
    assert won and lost
    assert all(e.price <= e.bid for e in won)
    assert all(e.price > e.bid for e in lost)
    assert result.total_cost == pytest.approx(sum(e.price for e in won))
    times = [e.time for e in result.events]
    assert times == sorted(times) and times[-1] < 5.0


def test_runs_are_reproducible():
    first = run(constant_sampler(n_types=2), FixedBidder(8.0), 3.0, seed=7)
    second = run(constant_sampler(n_types=2), FixedBidder(8.0), 3.0, seed=7)
    assert first.events == second.events
    other = run(constant_sampler(n_types=2), FixedBidder(8.0), 3.0, seed=8)
    assert other.events != first.events


def test_bidder_failure_aborts_run():
    result = run(constant_sampler(), BrokenBidder(5.0), 5.0, seed=0)
    assert result.aborted
    assert 'lost connection' in result.error
    assert all(e.time <= 1.0 for e in result.events)


def test_run_validation():
    with pytest.raises(ParameterError):
        run(constant_sampler(), FixedBidder(1.0), 0.0)


def plan_run(seed, requirement=300.0, sigma=0.5):
    grid = np.linspace(0.0, 100.0, 1001)
    curve = TimeVaryingSupplyCurve(grid, [0.0], -np.expm1(-grid / 10.0), [100.0])
    contracts = [Contract('c', 10.0, requirement, {'a'})]
    controller = RecedingHorizonController(contracts, decompose(contracts), [curve], replan_hours=1.0)
    rng_market, rng_bidder = np.random.default_rng([seed, 0]), np.random.default_rng([seed, 1])
    bidder = PlanBidder(controller, sigma, rng_bidder)
    sampler = synthetic_sampler([curve], span=(0.0, 10.0))
    return run(sampler, bidder, 12.0, seed=seed, rng=rng_market, contracts=contracts)


def test_plan_bidder_fulfils_contract():
    result = plan_run(3)
    assert not result.aborted
    assert result.fulfilled().all()
    assert result.acquired(0, 10.0) >= 300
    # nothing is bought once the deadline has passed
    assert all(e.time < 10.0 for e in result.events if e.won and e.contract is not None)
    assert result.trace and result.bid_path
    assert result.total_cost > 0


def test_normalized_paths():
    result = plan_run(4)
    u, mean, paths = normalize(result, n_points=50)
    assert u[0] == 0.0 and u[-1] == 1.0
    assert np.all(np.diff(paths[0]) >= 0)
    assert paths[0, -1] >= 1.0
    assert np.allclose(mean, paths.mean(axis=0))


def test_write_result(tmp_path):
    result = plan_run(5)
    write_result(result, str(tmp_path), {'policy': 'dynamic'})
    for name in ('events.csv', 'bids.csv', 'trace.csv', 'normalized.csv', 'summary.json'):
        assert (tmp_path / name).exists()
    doc = json.loads((tmp_path / 'summary.json').read_text())
    assert doc['policy'] == 'dynamic'
    assert doc['contracts'][0]['id'] == 'c'
    assert doc == json.loads(json.dumps(summary(result, {'policy': 'dynamic'})))


def test_noisy_bids_win_at_the_planned_rate():
    from RTBContracts.estimation import build_periodic_curve

    # prices Exponential(20), bids 20 + 10 Z
    grid = np.linspace(0.0, 200.0, 2001)
    rows = np.tile(-np.expm1(-grid / 20.0), (24, 1))
    curve = build_periodic_curve(np.full(24, 60.0), rows, grid, 10.0)
    planned = float(np.interp(20.0, curve.grid_x, curve.win_prob_at(3.0)))

    sampler = synthetic_sampler([curve])
    rng = np.random.default_rng(7)
    n = 40000
    prices = np.array([sampler.sample_price(3.0, 0, rng) for _ in range(n)])
    bids = 20.0 + 10.0 * rng.standard_normal(n)
    realized = float(np.mean(bids >= prices))
    assert abs(realized - planned) < 4.0 * math.sqrt(planned * (1.0 - planned) / n)


def test_sampler_warns_without_market_distribution(caplog):
    smoothed = TimeVaryingSupplyCurve(GRID, [0.0], -np.expm1(-GRID / 10.0), [100.0], sigma=2.0, name='s')
    with caplog.at_level('WARNING'):
        synthetic_sampler([smoothed], span=(0.0, 10.0))
    assert 'no market price distribution' in caplog.text
