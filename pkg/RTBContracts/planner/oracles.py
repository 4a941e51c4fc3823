# Copyright (c) 2026 RTBContracts contributors. All rights reserved.

import itertools
import logging

import numpy as np

from RTBContracts.errors import InfeasibleError, ParameterError, SizeError
from RTBContracts.grid import batch_eval
from RTBContracts.planner.plans import FlowPlan
from RTBContracts.planner.recovery import route_flow

logger = logging.getLogger(__name__)

MAX_BRUTE_FORCE_DIM = 3
MIN_BRUTE_FORCE_RESOLUTION = 64


def brute_force_solve(instance, resolution=128, num_samples=32768):
    '''
    Exhaustive search over a grid of pseudo-bids

    Every candidate rho fixes mu_q and the supplies W_q(mu_q); a candidate is
    feasible when Hall's condition holds for every contract subset, and costs
    sum_q f_q(mu_q). The best feasible candidate is within one grid cell of
    the optimum.
    :param instance: PlanningInstance with at most 3 contracts, types and periods
    :param resolution: grid points per contract on [0, bid cap]
    :return: FlowPlan, info holds cost, grid_step and rho
    '''
    n_c, n_t, n_k = instance.n_contracts, instance.n_types, instance.n_periods
    if max(n_c, n_t, n_k) > MAX_BRUTE_FORCE_DIM:
        raise SizeError('brute force limited to %d contracts, types and periods, got %d x %d x %d'
                        % (MAX_BRUTE_FORCE_DIM, n_c, n_t, n_k))
    if resolution < MIN_BRUTE_FORCE_RESOLUTION:
        raise ParameterError('brute force resolution must be >= %d' % MIN_BRUTE_FORCE_RESOLUTION)

    mask = instance.eligibility()
    reqs = instance.requirements
    if n_c == 0:
        n_q = len(instance.compound)
        return FlowPlan(np.zeros(n_q), np.zeros((0, n_q)), np.zeros(0), info={'cost': 0.0, 'grid_step': 0.0,
                                                                              'rho': np.zeros(0)})
    levels = np.linspace(0.0, instance.bid_cap, resolution)
    curves = [ct.curve for ct in instance.compound]

    subsets = [s for r in range(1, n_c + 1) for s in itertools.combinations(range(n_c), r)]
    # [S, Q] neighbourhoods and [S] demands for Hall's condition
    hall = np.array([mask[:, list(s)].any(axis=1) for s in subsets], dtype=float).reshape(len(subsets), -1)
    demand = np.array([reqs[list(s)].sum() for s in subsets])
    slack = 1e-9 * np.maximum(1.0, demand)

    def cost_of(flat):
        rho = levels[np.stack(np.unravel_index(flat, (resolution,) * n_c), axis=1)]
        mu = np.where(mask[None, :, :], rho[:, None, :], -np.inf).max(axis=2)
        supply = np.stack([c.eval(mu[:, q]) for q, c in enumerate(curves)], axis=1)
        cost = np.stack([c.cost(mu[:, q]) for q, c in enumerate(curves)], axis=1).sum(axis=1)
        feasible = np.all(supply @ hall.T >= demand[None, :] - slack[None, :], axis=1)
        return np.where(feasible, cost, np.inf)

    flat = np.arange(resolution ** n_c)
    costs = batch_eval(flat, cost_of, num_samples)
    best = int(np.argmin(costs))
    if not np.isfinite(costs[best]):
        raise InfeasibleError('no grid point meets every requirement', instance.contract_ids,
                              float(reqs.sum()), float(sum(c.capacity for c in curves)))

    rho = levels[np.array(np.unravel_index(best, (resolution,) * n_c))]
    mu = np.where(mask, rho[None, :], -np.inf).max(axis=1)
    supply = np.array([float(c.eval(mu[q])) for q, c in enumerate(curves)])
    flows = route_flow(supply, reqs, mask)
    for q in range(len(curves)):
        excess = supply[q] - flows[:, q].sum()
        if excess > 0:
            owners = np.nonzero(mask[q])[0]
            flows[owners, q] += excess / len(owners)
    shortfall = np.maximum(reqs - flows.sum(axis=1), 0.0)
    shortfall[shortfall <= 1e-9 * np.maximum(1.0, reqs)] = 0.0
    info = {'cost': float(costs[best]), 'grid_step': float(levels[1] - levels[0]), 'rho': rho}
    logger.debug('brute force over %d points: cost %.6g', len(flat), info['cost'])
    return FlowPlan(supply, flows, shortfall, info=info)


def single_contract_bid(requirement, duration, curve, t0=0.0):
    '''
    Optimal constant bid of a lone contract needing ``requirement`` items
    within ``duration`` hours from t0
    :return: lowest bid whose aggregate supply meets the requirement, the bid
             cap when no bid does
    '''
    if duration <= 0:
        raise ParameterError('contract duration must be positive')
    if requirement < 0:
        raise ParameterError('requirement must be non-negative')
    agg = curve.aggregate(t0, t0 + duration)
    if requirement < agg.capacity:
        return float(agg.invert(requirement))
    return agg.bid_cap
