# Copyright (c) 2026 RTBContracts contributors. All rights reserved.

import numpy as np

from RTBContracts.errors import ParameterError

DEFAULT_RESOLUTION = 512


def create_bid_grid(x_max, sigma=0.0, resolution=DEFAULT_RESOLUTION, x_min=None):
    '''
    Create the uniform bid grid every curve of a run shares
    :param x_max: largest representable bid, the bid cap
    :param sigma: bid randomization, the grid starts 4 sigma below zero
    :param resolution: number of grid points
    :param x_min: explicit lower bound overriding the sigma rule
    :return: [resolution] grid of bids
    '''
    if resolution < 2:
        raise ParameterError('grid resolution must be >= 2')
    if x_min is None:
        x_min = -4.0 * sigma
    if x_max <= x_min:
        raise ParameterError('empty bid grid [%g, %g]' % (x_min, x_max))
    return np.linspace(x_min, x_max, resolution)


def create_time_knots(span_hours, step=1.0, start=0.0):
    n = int(round(span_hours / step))
    return start + step * np.arange(n)


def grid_step(grid):
    return float(grid[1] - grid[0])


def batch_eval(points, eval_func, num_samples=65536):
    '''
    Evaluate eval_func over the leading axis of points in chunks
    :param points: [N, ...] array
    :param eval_func: maps a chunk [n, ...] to [n] values
    :param num_samples: chunk size bounding peak memory
    :return: [N] values
    '''
    num_pts = points.shape[0]
    vals = np.zeros(num_pts)

    num_batches = num_pts // num_samples
    for i in range(num_batches):
        vals[i * num_samples:(i + 1) * num_samples] = eval_func(points[i * num_samples:(i + 1) * num_samples])
    if num_pts % num_samples:
        vals[num_batches * num_samples:] = eval_func(points[num_batches * num_samples:])

    return vals
