# Copyright (c) 2026 RTBContracts contributors. All rights reserved.

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.stats import norm

from RTBContracts.errors import ParameterError
from RTBContracts.supply.SupplySlice import SupplySlice

KERNEL_HALF_WIDTH = 6.0
GRID_EXTENSION = 4.0
FLOOR_SLOPE = 1e-12


@dataclass(frozen=True)
class RawWinCurve:
    """
    Win curve as observed, possibly with jumps: right-continuous step
    function taking ``values[i]`` on [grid_x[i], grid_x[i + 1]).
    Below the grid the curve is 0, above it the last value.
    """
    grid_x: np.ndarray
    values: np.ndarray
    bound: Optional[float] = None

    def __post_init__(self):
        x = np.asarray(self.grid_x, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if x.ndim != 1 or x.shape != v.shape or len(x) < 2:
            raise ParameterError('raw curve needs matching 1-D grid and values')
        step = np.diff(x)
        if np.any(step <= 0) or not np.allclose(step, step[0], rtol=1e-6, atol=0):
            raise ParameterError('raw curve grid must be uniform and increasing')
        if np.any(v < 0) or np.any(np.diff(v) < -1e-12):
            raise ParameterError('raw curve must be non-negative and non-decreasing')
        object.__setattr__(self, 'grid_x', x)
        object.__setattr__(self, 'values', v)
        if self.bound is None:
            object.__setattr__(self, 'bound', float(v.max()))

    @property
    def step(self):
        return float(self.grid_x[1] - self.grid_x[0])


def gaussian_cell_kernel(step, sigma):
    '''
    Weights of a unit Gaussian over grid cells, truncated at +-6 sigma
    :param step: grid spacing
    :param sigma: kernel width
    :return: [2K] weights for cell offsets -K..K-1, summing to one
    '''
    half = max(int(math.ceil(KERNEL_HALF_WIDTH * sigma / step)), 1)
    edges = np.arange(-half, half + 1) * step / sigma
    weights = np.diff(norm.cdf(edges))
    return weights / weights.sum(), half


def smooth_curve(raw: RawWinCurve, sigma, floor_slope=FLOOR_SLOPE):
    '''
    Gaussian convolution E[W(x + sigma X)] of a raw win curve
    :param raw: RawWinCurve
    :param sigma: standard deviation of the bid randomization
    :param floor_slope: per grid step increment (relative to the bound) added for strict monotonicity
    :return: SupplySlice on the raw grid extended down to -4 sigma
    '''
    if not sigma > 0:
        raise ParameterError('sigma must be positive, got %r' % sigma)
    h = raw.step
    x0 = raw.grid_x[0]
    n_ext = max(int(math.ceil((x0 + GRID_EXTENSION * sigma) / h - 1e-9)), 0)
    grid = np.concatenate([x0 - h * np.arange(n_ext, 0, -1), raw.grid_x])
    vals = np.concatenate([np.zeros(n_ext), raw.values])

    weights, half = gaussian_cell_kernel(h, sigma)
    padded = np.concatenate([np.zeros(half), vals, np.full(half, vals[-1])])
    smoothed = np.correlate(padded, weights, mode='valid')[:len(vals)]

    smoothed = np.maximum.accumulate(np.clip(smoothed, 0.0, None))
    smoothed = smoothed + floor_slope * raw.bound * np.arange(len(grid))
    return SupplySlice(grid, smoothed)
