# Copyright (c) 2026 RTBContracts contributors. All rights reserved.

import logging

import numpy as np
from scipy.integrate import cumulative_trapezoid

from RTBContracts.errors import ParameterError, SupplyExceededError

logger = logging.getLogger(__name__)

CLAMP_TOL = 1e-9


def _out(value):
    value = np.asarray(value)
    return float(value) if value.ndim == 0 else value


class SupplySlice:
    """
    A non-decreasing curve W(x) sampled on a bid grid and linearly
    interpolated between grid points.

    Used both for one time slice of a supply surface (items per hour) and
    for period aggregates (items). The expected second price cost is
    f(x) = x W(x) - int_0^x W(u) du, evaluated exactly for the piecewise
    linear interpolant so that f'(x) = x W'(x) holds cell by cell.
    """

    def __init__(self, grid_x, values):
        grid_x = np.asarray(grid_x, dtype=float)
        values = np.asarray(values, dtype=float)
        if grid_x.ndim != 1 or grid_x.shape != values.shape or len(grid_x) < 2:
            raise ParameterError('grid and values must be matching 1-D arrays with >= 2 points')
        if np.any(np.diff(grid_x) <= 0):
            raise ParameterError('bid grid must be strictly increasing')
        if not np.all(np.isfinite(values)):
            raise ParameterError('curve values must be finite')

        self.grid_x = grid_x
        self.values = np.maximum.accumulate(np.maximum(values, 0.0))
        self._cum = cumulative_trapezoid(self.values, grid_x, initial=0.0)
        self._g0 = float(self._primitive(0.0))
        self.grid_x.flags.writeable = False
        self.values.flags.writeable = False

    @property
    def bid_cap(self):
        return float(self.grid_x[-1])

    @property
    def capacity(self):
        return float(self.values[-1])

    @property
    def zero_level(self):
        """Supply obtained with a bid of exactly 0."""
        return float(self.eval(0.0))

    def scaled(self, factor):
        return SupplySlice(self.grid_x, self.values * factor)

    def eval(self, x):
        return _out(np.interp(x, self.grid_x, self.values, left=0.0, right=self.values[-1]))

    def _primitive(self, x):
        # int_{x_0}^{x} W(u) du for the linear interpolant
        grid, vals = self.grid_x, self.values
        x = np.asarray(x, dtype=float)
        xc = np.clip(x, grid[0], grid[-1])
        k = np.clip(np.searchsorted(grid, xc, side='right') - 1, 0, len(grid) - 2)
        w = np.interp(xc, grid, vals)
        prim = self._cum[k] + (xc - grid[k]) * (vals[k] + w) / 2.0
        prim = prim + np.maximum(x - grid[-1], 0.0) * vals[-1]
        return np.where(x < grid[0], 0.0, prim)

    def integral(self, x):
        '''
        :param x: bid
        :return: int_0^x W(u) du for x > 0, else 0
        '''
        x = np.asarray(x, dtype=float)
        val = np.where(x > 0, self._primitive(x) - self._g0, 0.0)
        return _out(np.maximum(val, 0.0))

    def cost(self, x):
        x = np.asarray(x, dtype=float)
        val = np.where(x > 0, x * np.asarray(self.eval(x)) - np.asarray(self.integral(x)), 0.0)
        return _out(np.maximum(val, 0.0))

    def invert(self, s, clamp_tol=CLAMP_TOL):
        '''
        Lowest bid whose supply reaches s
        :param s: requested supply, 0 <= s < capacity
        :param clamp_tol: requests this close above the capacity return the bid cap
        :return: bid
        '''
        s = np.asarray(s, dtype=float)
        grid, vals = self.grid_x, self.values
        top = vals[-1]
        excess = s - top
        limit = clamp_tol * max(1.0, top)
        if np.any(excess > limit):
            raise SupplyExceededError(float(np.max(s)), top)
        if np.any(excess > 0):
            logger.warning('supply request within %.1e of capacity %.6g clamped to the bid cap', limit, top)

        sc = np.minimum(s, top)
        k = np.clip(np.searchsorted(vals, sc, side='left'), 1, len(vals) - 1)
        lo, hi = vals[k - 1], vals[k]
        span = np.where(hi > lo, hi - lo, 1.0)
        x = grid[k - 1] + np.clip((sc - lo) / span, 0.0, 1.0) * (grid[k] - grid[k - 1])
        x = np.where(sc <= vals[0], grid[0], x)
        return _out(x)

    def acquisition(self, s):
        '''
        Minimum expected cost of acquiring s items and its derivative
        :param s: requested supply
        :return: (Lambda(s), Lambda'(s))
        '''
        x = np.asarray(self.invert(s))
        s = np.asarray(s, dtype=float)
        lam = np.asarray(self.cost(x))
        slope = np.where(s >= self.zero_level, np.maximum(x, 0.0), 0.0)
        return _out(lam), _out(slope)
