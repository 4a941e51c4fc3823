# Copyright (c) 2026 RTBContracts contributors. All rights reserved.

import logging
import math

import numpy as np

from RTBContracts.errors import ConfigurationError, ParameterError
from RTBContracts.market import steady_state_win_prob

logger = logging.getLogger(__name__)

HOURS_PER_DAY = 24
PRICE_TABLE_STEP = 0.1
RATE_HEADROOM = 1.05


class MarketSampler:
    """Draws the time to the next auction of a type and its market price."""

    @property
    def n_types(self):
        raise NotImplementedError

    def sample_event(self, t, j, rng):
        '''
        :param t: current time (hours)
        :param j: item type
        :param rng: numpy Generator
        :return: (interarrival, price) of the next type j auction
        '''
        raise NotImplementedError


class EmpiricalSampler(MarketSampler):
    '''
    Resamples logged interarrival times and prices per (type, hour of day)
    :param interarrivals: interarrivals[j][h], positive times in hours
    :param prices: prices[j][h], non-negative market prices
    '''

    def __init__(self, interarrivals, prices):
        if len(interarrivals) != len(prices):
            raise ConfigurationError('interarrival and price tables cover different types')
        self.interarrivals = []
        self.prices = []
        for j, (gaps_j, prices_j) in enumerate(zip(interarrivals, prices)):
            if len(gaps_j) != HOURS_PER_DAY or len(prices_j) != HOURS_PER_DAY:
                raise ConfigurationError('type %d: need %d hourly buckets' % (j, HOURS_PER_DAY))
            gaps_j = [np.asarray(g, dtype=float) for g in gaps_j]
            prices_j = [np.asarray(p, dtype=float) for p in prices_j]
            for h in range(HOURS_PER_DAY):
                if gaps_j[h].size == 0 or prices_j[h].size == 0:
                    raise ConfigurationError('type %d hour %d: empty bucket' % (j, h))
                if np.any(gaps_j[h] <= 0):
                    raise ConfigurationError('type %d hour %d: interarrivals must be positive' % (j, h))
                if np.any(prices_j[h] < 0):
                    raise ConfigurationError('type %d hour %d: prices must be non-negative' % (j, h))
            self.interarrivals.append(gaps_j)
            self.prices.append(prices_j)

    @property
    def n_types(self):
        return len(self.interarrivals)

    def hour_for(self, t, rng):
        # hour floor(t) + 1 with probability t - floor(t)
        base = math.floor(t)
        frac = t - base
        hour = base + 1 if rng.random() < frac else base
        return int(hour) % HOURS_PER_DAY

    def sample_event(self, t, j, rng):
        h = self.hour_for(t, rng)
        gaps, prices = self.interarrivals[j][h], self.prices[j][h]
        return float(gaps[rng.integers(gaps.size)]), float(prices[rng.integers(prices.size)])


class SyntheticSampler(MarketSampler):
    '''
    Poisson arrivals with rate lambda_j(t), drawn by thinning, and prices
    with P(price <= x) = W_ss_j(x, t), drawn by inverting a tabulated CDF.
    Probability mass above the bid grid is placed at twice the bid cap.
    :param rate_fns: per type lambda_j(t)
    :param cdf_fns: per type cdf(t) -> [nx] non-decreasing W_ss on grid_x
    :param grid_x: price grid shared by the CDFs
    :param span: (t0, t1) range the price table covers, or the period for periodic markets
    '''

    def __init__(self, rate_fns, cdf_fns, grid_x, span, period_hours=None, table_step=PRICE_TABLE_STEP):
        if len(rate_fns) != len(cdf_fns):
            raise ConfigurationError('rate and price distributions cover different types')
        self.rate_fns = list(rate_fns)
        self.grid_x = np.asarray(grid_x, dtype=float)
        self.period_hours = period_hours
        t0, t1 = (0.0, float(period_hours)) if period_hours else (float(span[0]), float(span[1]))
        if not t1 > t0:
            raise ParameterError('sampler time span must be non-empty')
        n = max(int(math.ceil((t1 - t0) / table_step)), 1)
        self.t_nodes = np.linspace(t0, t1, n + 1)
        # strictly increasing so the inverse is well defined
        ramp = 1e-12 * np.arange(len(self.grid_x))
        self.tables = []
        self.rate_max = []
        fine = np.linspace(t0, t1, 10 * n + 1)
        for j, cdf in enumerate(cdf_fns):
            rows = np.stack([np.maximum.accumulate(np.clip(np.asarray(cdf(t), dtype=float), 0.0, 1.0))
                             for t in self.t_nodes])
            self.tables.append(rows + ramp[None, :])
            top = max(float(np.max([self.rate_fns[j](t) for t in fine])), 0.0)
            if top <= 0:
                raise ConfigurationError('type %d: arrival rate must be positive somewhere' % j)
            self.rate_max.append(RATE_HEADROOM * top)

    @property
    def n_types(self):
        return len(self.rate_fns)

    def _local(self, t):
        if self.period_hours:
            return t % self.period_hours
        return min(max(t, self.t_nodes[0]), self.t_nodes[-1])

    def price_cdf(self, t, j):
        t = self._local(t)
        pos = (t - self.t_nodes[0]) / (self.t_nodes[1] - self.t_nodes[0])
        i = min(max(int(pos), 0), len(self.t_nodes) - 2)
        w = pos - i
        return (1 - w) * self.tables[j][i] + w * self.tables[j][i + 1]

    def sample_price(self, t, j, rng):
        cdf = self.price_cdf(t, j)
        u = rng.random()
        if u > cdf[-1]:
            return 2.0 * float(self.grid_x[-1])
        return max(float(np.interp(u, cdf, self.grid_x)), 0.0)

    def sample_interarrival(self, t, j, rng):
        top = self.rate_max[j]
        s = t
        while True:
            s += rng.exponential(1.0 / top)
            rate = self.rate_fns[j](s)
            if rate > top:
                logger.warning('type %d: rate %.4g above thinning bound %.4g at t=%.3f', j, rate, top, s)
            if rng.random() * top <= rate:
                return s - t

    def sample_event(self, t, j, rng):
        dt = self.sample_interarrival(t, j, rng)
        return dt, self.sample_price(t + dt, j, rng)


def synthetic_sampler(curves, markets=None, span=None):
    '''
    Sampler reproducing the given supply curves
    :param curves: per type TimeVaryingSupplyCurve; rates come from them and,
                   unless markets are given, so do prices: from the unsmoothed
                   market distribution a curve keeps, else its own win probability
    :param markets: optional per type SteadyStateMarket whose win probability
                    is the price distribution instead
    :param span: (t0, t1) for non-periodic curves
    '''
    curves = list(curves)
    if not curves:
        raise ConfigurationError('no supply curves to sample from')
    first = curves[0]
    if span is None:
        span = (float(first.grid_t[0]), float(first.grid_t[-1]))
    rate_fns = [c.rate_at for c in curves]
    if markets is not None:
        grid_x = first.grid_x
        cdf_fns = [(lambda t, m=m: steady_state_win_prob(m, grid_x)) for m in markets]
    else:
        price_curves = [c.price_curve for c in curves]
        smoothed = [c.name for c, p in zip(curves, price_curves) if p.sigma > 0]
        if smoothed:
            logger.warning('curves %s carry no market price distribution; prices are drawn from the win curve '
                           'smoothed with sigma, so noisy bids win less often than planned', smoothed)
        grid_x = price_curves[0].grid_x
        for c in price_curves[1:]:
            if c.grid_x.shape != grid_x.shape or not np.allclose(c.grid_x, grid_x):
                raise ConfigurationError('synthetic market curves must share one price grid')
        cdf_fns = [c.win_prob_at for c in price_curves]
    return SyntheticSampler(rate_fns, cdf_fns, grid_x, span, first.period_hours)


def sample_event(sampler, t, j, rng):
    return sampler.sample_event(t, j, rng)
