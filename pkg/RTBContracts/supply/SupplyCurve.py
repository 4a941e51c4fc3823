# Copyright (c) 2026 RTBContracts contributors. All rights reserved.

import logging
import math

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.interpolate import PchipInterpolator

from RTBContracts.errors import ParameterError
from RTBContracts.supply.SupplySlice import SupplySlice

logger = logging.getLogger(__name__)

DEFAULT_QUAD_STEP = 0.05


class TimeVaryingSupplyCurve:
    """
    Supply surface W(x, t) = lambda(t) * W_ss(x, t) on a bid grid.

    Knots in t carry the arrival rate and the steady-state win probability
    slice; between knots both are interpolated with a shape preserving cubic
    (PCHIP, wrapped around the period when the curve is periodic) and every
    interpolated slice is re-projected onto its monotone envelope in x.

    Time integrals are served from a cumulative trapezoid table with a step of
    at most ``quad_step`` hours, so aggregates over arbitrary windows are cheap.

    A curve smoothed with bid noise may keep ``market``, the unsmoothed curve
    (sigma 0, same knots and rates) holding the market price distribution.
    """

    def __init__(self, grid_x, grid_t, win_prob, lam, sigma=0.0, period_hours=None,
                 quad_step=DEFAULT_QUAD_STEP, name=None, market=None):
        grid_x = np.array(grid_x, dtype=float)
        grid_t = np.atleast_1d(np.array(grid_t, dtype=float))
        win_prob = np.array(win_prob, dtype=float)
        lam = np.atleast_1d(np.array(lam, dtype=float))
        if win_prob.ndim == 1:
            win_prob = win_prob[None, :]

        if grid_x.ndim != 1 or len(grid_x) < 2 or np.any(np.diff(grid_x) <= 0):
            raise ParameterError('bid grid must be strictly increasing with >= 2 points')
        if np.any(np.diff(grid_t) <= 0):
            raise ParameterError('time knots must be strictly increasing')
        if win_prob.shape != (len(grid_t), len(grid_x)):
            raise ParameterError('win_prob must have shape %s, got %s'
                                 % ((len(grid_t), len(grid_x)), win_prob.shape))
        if lam.shape != grid_t.shape:
            raise ParameterError('lambda must have one value per time knot')
        if np.any(lam < 0) or not np.all(np.isfinite(lam)):
            raise ParameterError('arrival rates must be finite and non-negative')
        if np.any(win_prob < -1e-9) or np.any(win_prob > 1 + 1e-9):
            raise ParameterError('win probabilities must lie in [0, 1]')
        if np.any(np.diff(win_prob, axis=1) < -1e-9):
            raise ParameterError('win probabilities must be non-decreasing in the bid')
        if sigma < 0:
            raise ParameterError('sigma must be >= 0')
        if period_hours is not None:
            if period_hours <= 0:
                raise ParameterError('period must be positive')
            if grid_t[0] < 0 or grid_t[-1] >= period_hours:
                raise ParameterError('periodic knots must lie in [0, period)')
        if quad_step <= 0:
            raise ParameterError('quadrature step must be positive')
        if market is not None and (market.sigma != 0 or market.grid_t.shape != grid_t.shape
                                   or not np.allclose(market.grid_t, grid_t)
                                   or market.period_hours != (None if period_hours is None else float(period_hours))):
            raise ParameterError('market curve must be unsmoothed and share time knots and period')

        self.grid_x = grid_x
        self.grid_t = grid_t
        self.win_prob = np.clip(win_prob, 0.0, 1.0)
        self.lam = lam
        self.sigma = float(sigma)
        self.period_hours = None if period_hours is None else float(period_hours)
        self.quad_step = float(quad_step)
        self.name = name
        self.market = market
        for arr in (self.grid_x, self.grid_t, self.win_prob, self.lam):
            arr.flags.writeable = False

        self._build_interpolants()
        self._build_table()

    @classmethod
    def from_function(cls, grid_x, grid_t, win_fn, lam_fn, **kwargs):
        '''
        Tabulate analytic rate and win-probability functions on knots
        :param win_fn: win_fn(x, t) -> W_ss over the bid grid
        :param lam_fn: lam_fn(t) -> arrival rate
        '''
        grid_x = np.asarray(grid_x, dtype=float)
        grid_t = np.atleast_1d(np.asarray(grid_t, dtype=float))
        win_prob = np.stack([np.asarray(win_fn(grid_x, t), dtype=float) for t in grid_t])
        lam = np.array([float(lam_fn(t)) for t in grid_t])
        return cls(grid_x, grid_t, win_prob, lam, **kwargs)

    @property
    def periodic(self):
        return self.period_hours is not None

    @property
    def bid_cap(self):
        return float(self.grid_x[-1])

    def _build_interpolants(self):
        if len(self.grid_t) == 1:
            self._wp_interp = None
            self._lam_interp = None
            return
        t, wp, lam = self.grid_t, self.win_prob, self.lam
        if self.periodic:
            p = self.period_hours
            t = np.concatenate([t - p, t, t + p])
            wp = np.concatenate([wp, wp, wp])
            lam = np.concatenate([lam, lam, lam])
        self._wp_interp = PchipInterpolator(t, wp, axis=0)
        self._lam_interp = PchipInterpolator(t, lam)

    def local_time(self, t):
        t = np.asarray(t, dtype=float)
        if self.periodic:
            return np.mod(t, self.period_hours)
        return np.clip(t, self.grid_t[0], self.grid_t[-1])

    def win_prob_at(self, t):
        '''
        :param t: time or array of times
        :return: [nx] (or [nt, nx]) monotone win-probability slices
        '''
        scalar = np.ndim(t) == 0
        tt = np.atleast_1d(self.local_time(t))
        if self._wp_interp is None:
            rows = np.repeat(self.win_prob, len(tt), axis=0)
        else:
            rows = self._wp_interp(tt)
        rows = np.maximum.accumulate(np.clip(rows, 0.0, 1.0), axis=1)
        return rows[0] if scalar else rows

    def rate_at(self, t):
        scalar = np.ndim(t) == 0
        tt = np.atleast_1d(self.local_time(t))
        if self._lam_interp is None:
            rates = np.repeat(self.lam, len(tt))
        else:
            rates = np.maximum(self._lam_interp(tt), 0.0)
        return float(rates[0]) if scalar else rates

    def rows(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return self.rate_at(t)[:, None] * self.win_prob_at(t)

    def slice(self, t):
        return SupplySlice(self.grid_x, self.rate_at(t) * self.win_prob_at(t))

    def bound(self, t):
        """B(t), the supply obtained at the bid cap."""
        return self.rate_at(t) * self.win_prob_at(t)[..., -1]

    def _build_table(self):
        if self.periodic:
            a, b = 0.0, self.period_hours
        else:
            a, b = float(self.grid_t[0]), float(self.grid_t[-1])
        n = max(int(math.ceil((b - a) / self.quad_step - 1e-9)), 1)
        self._t_nodes = np.linspace(a, b, n + 1)
        self._dt = (b - a) / n if b > a else 0.0
        if b > a:
            rows = self.rows(self._t_nodes)
            self._cum = cumulative_trapezoid(rows, self._t_nodes, axis=0, initial=0.0)
        else:
            rows = self.rows(self._t_nodes[:1])
            self._cum = np.zeros((1, len(self.grid_x)))
        self._first_row = rows[0]
        self._last_row = rows[-1]

    def _table_row(self, t):
        pos = (t - self._t_nodes[0]) / self._dt
        i = min(max(int(math.floor(pos)), 0), len(self._t_nodes) - 2)
        frac = pos - i
        return self._cum[i] + frac * (self._cum[i + 1] - self._cum[i])

    def cumulative(self, t):
        '''
        :param t: time
        :return: [nx] integral of W(x, u) du from the table origin to t
        '''
        t = float(t)
        a = self._t_nodes[0]
        if self.periodic:
            p = self.period_hours
            m = math.floor(t / p)
            return m * self._cum[-1] + self._table_row(t - m * p)
        if self._dt == 0.0 or t <= a:
            return (t - a) * self._first_row
        b = self._t_nodes[-1]
        if t >= b:
            return self._cum[-1] + (t - b) * self._last_row
        return self._table_row(t)

    def aggregate(self, t0, t1):
        if not t0 < t1:
            raise ParameterError('aggregation window must satisfy t0 < t1, got [%g, %g]' % (t0, t1))
        return SupplySlice(self.grid_x, self.cumulative(t1) - self.cumulative(t0))

    def average(self, t0, t1):
        return self.aggregate(t0, t1).scaled(1.0 / (t1 - t0))

    def shifted(self, offset):
        """The same market seen from a clock that starts ``offset`` hours later."""
        market = None if self.market is None else self.market.shifted(offset)
        if self.periodic:
            t = np.mod(self.grid_t - offset, self.period_hours)
            order = np.argsort(t)
            return TimeVaryingSupplyCurve(self.grid_x, t[order], self.win_prob[order], self.lam[order],
                                          sigma=self.sigma, period_hours=self.period_hours,
                                          quad_step=self.quad_step, name=self.name, market=market)
        return TimeVaryingSupplyCurve(self.grid_x, self.grid_t - offset, self.win_prob, self.lam,
                                      sigma=self.sigma, quad_step=self.quad_step, name=self.name, market=market)

    @property
    def price_curve(self):
        """Curve whose win probability is the market price distribution."""
        return self if self.market is None else self.market

    def __repr__(self):
        return '%s(name=%r, nx=%d, nt=%d, period=%r, sigma=%g)' % (
            type(self).__name__, self.name, len(self.grid_x), len(self.grid_t), self.period_hours, self.sigma)


def eval_W(curve, x, t):
    return curve.slice(t).eval(x)


def invert_W(curve, s, t):
    return curve.slice(t).invert(s)


def expected_cost(curve, x, t):
    return curve.slice(t).cost(x)


def acquisition_cost(curve, s, t):
    return curve.slice(t).acquisition(s)


def aggregate(curve, t0, t1):
    '''
    Aggregate supply over a window
    :return: SupplySlice holding W_bar; its cost() is f_bar and acquisition() Lambda_bar
    '''
    return curve.aggregate(t0, t1)


def supply_bound(curve, t):
    return curve.bound(t)


def combine_curves(curves, name=None):
    '''
    Supply of the union of disjoint atoms: rates add and the win probability
    is the rate weighted mixture at every knot
    :param curves: TimeVaryingSupplyCurve objects sharing grids and period
    '''
    curves = list(curves)
    if not curves:
        raise ParameterError('nothing to combine')
    if len(curves) == 1:
        return curves[0]
    first = curves[0]
    for c in curves[1:]:
        if (c.grid_x.shape != first.grid_x.shape or not np.allclose(c.grid_x, first.grid_x)
                or c.grid_t.shape != first.grid_t.shape or not np.allclose(c.grid_t, first.grid_t)
                or c.period_hours != first.period_hours):
            raise ParameterError('curves to combine must share bid grid, time knots and period')
    lam = np.sum([c.lam for c in curves], axis=0)
    weighted = np.sum([c.lam[:, None] * c.win_prob for c in curves], axis=0)
    safe = np.where(lam > 0, lam, 1.0)
    win_prob = np.where(lam[:, None] > 0, weighted / safe[:, None], first.win_prob)
    market = None
    if all(c.market is not None for c in curves):
        market = combine_curves([c.market for c in curves], name=name)
    elif any(c.market is not None for c in curves):
        logger.warning('only some curves of %s keep their market price distribution, dropping it', name)
    return TimeVaryingSupplyCurve(first.grid_x, first.grid_t, win_prob, lam,
                                  sigma=max(c.sigma for c in curves), period_hours=first.period_hours,
                                  quad_step=first.quad_step, name=name, market=market)
