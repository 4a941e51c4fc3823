# Copyright (c) 2026 RTBContracts contributors. All rights reserved.

"""
Dual of the piecewise constant planning problem.

For pseudo-bids rho >= 0 (one per contract) let mu_q be the largest rho over
the contracts eligible for compound type q. The dual function is

    g(rho) = sum_i rho_i C_i - sum_q int_0^{mu_q} W_q(u) du

which equals sum_q [f_q(mu_q) - mu_q W_q(mu_q)] + sum_i rho_i C_i. Two
maximisers are provided: an exact price-level decomposition driven by
min-cuts ("levels") and projected supergradient ascent with averaging
("supergradient").
"""

import logging
import math

import networkx as nx
import numpy as np
from scipy.optimize import brentq

from RTBContracts.errors import InfeasibleError, SolverError
from RTBContracts.planner.plans import PseudoBids, SolverReport
from RTBContracts.planner.recovery import FLOW_RESOLUTION, plan_cost, recover_primal, route_flow

logger = logging.getLogger(__name__)

DIVERGENCE_CHECKS = 100


def compute_mu(mask, rho):
    """mu_q = max of rho over the contracts eligible for q; [Q] from a [Q, N] mask."""
    if mask.shape[0] == 0:
        return np.zeros(0)
    return np.where(mask, rho[None, :], -np.inf).max(axis=1)


def dual_value(instance, rho):
    rho = np.asarray(rho, dtype=float)
    mu = compute_mu(instance.eligibility(), rho)
    total = float(rho @ instance.requirements)
    for q, ct in enumerate(instance.compound):
        total -= float(ct.curve.integral(mu[q]))
    return total


def supergradient(instance, rho, tie_tol=1e-9, mask=None):
    '''
    A supergradient of g at rho; supply of a type is split evenly between
    the contracts tied at its maximum
    :return: ([N] supergradient, [Q] mu)
    '''
    if mask is None:
        mask = instance.eligibility()
    mu = compute_mu(mask, rho)
    grad = instance.requirements.astype(float).copy()
    tied = mask & (rho[None, :] >= mu[:, None] - tie_tol * np.maximum(1.0, np.abs(mu[:, None])))
    for q, ct in enumerate(instance.compound):
        owners = np.nonzero(tied[q])[0]
        grad[owners] -= float(ct.curve.eval(mu[q])) / len(owners)
    return grad, mu


def duality_gap(instance, pseudo, flow, penalty=None):
    '''
    Relative gap between the cost of a recovered plan and the dual value
    :param penalty: shortfall weight when the plan came from the penalised problem
    '''
    primal = plan_cost(instance, flow)
    if penalty is not None:
        primal += penalty * float(flow.shortfall.sum())
    dual = dual_value(instance, pseudo.rho)
    return (primal - dual) / max(1.0, abs(primal)), primal, dual


def capacity_check(instance, mask=None):
    '''
    Raise InfeasibleError when bidding the cap everywhere cannot route all
    requirements
    '''
    if mask is None:
        mask = instance.eligibility()
    capacity = np.array([ct.curve.capacity for ct in instance.compound])
    flows = route_flow(capacity, instance.requirements, mask)
    short = instance.requirements - flows.sum(axis=1)
    tol = 1e-9 * np.maximum(1.0, instance.requirements)
    if np.any(short > tol):
        offending = [instance.contract_ids[n] for n in np.nonzero(short > tol)[0]]
        raise InfeasibleError('supply at the bid cap cannot meet contracts %s' % offending, offending,
                              float(instance.requirements.sum()), float(capacity.sum()))


# ---------------------------------------------------------------- levels

def _supply_at(instance, qs, price):
    return np.array([float(instance.compound[q].curve.eval(price)) for q in qs])


def _neighbours(mask, contracts, types):
    if not contracts:
        return []
    hit = mask[:, contracts].any(axis=1)
    return [q for q in types if hit[q]]


def _max_deficit(instance, mask, contracts, types, price, tol):
    '''
    Largest C(S) - sum_{q in N(S)} W_q(price) over contract subsets S, by a
    max-closure min-cut
    :return: (S as a list of local contract indices, deficit)
    '''
    reqs = instance.requirements
    supply = _supply_at(instance, types, price)
    top = max(float(reqs[contracts].max(initial=0.0)), float(supply.max(initial=0.0)))
    if top <= 0:
        return [], 0.0
    scale = FLOW_RESOLUTION / top

    G = nx.DiGraph()
    G.add_node('s')
    G.add_node('t')
    for i in contracts:
        G.add_edge('s', ('c', i), capacity=int(round(reqs[i] * scale)))
    for q, w in zip(types, supply):
        G.add_edge(('q', q), 't', capacity=int(round(w * scale)))
        for i in contracts:
            if mask[q, i]:
                G.add_edge(('c', i), ('q', q))

    _, (reachable, _) = nx.minimum_cut(G, 's', 't')
    subset = [i for i in contracts if ('c', i) in reachable]
    nbrs = set(_neighbours(mask, subset, types))
    deficit = float(reqs[subset].sum()) - float(sum(w for q, w in zip(types, supply) if q in nbrs))
    if deficit <= tol:
        return [], 0.0
    return subset, deficit


def _level_price(instance, qs, need, lo, hi, tol):
    '''
    Lowest price p in [lo, hi] with sum_{q in qs} W_q(p) >= need
    :return: price, or None when even hi falls short
    '''
    def excess(p):
        return float(_supply_at(instance, qs, p).sum()) - need

    at_hi = excess(hi)
    if at_hi < -tol:
        return None
    if at_hi <= 0:
        return hi
    if excess(lo) >= 0:
        return lo
    return brentq(excess, lo, hi, xtol=1e-12 * max(1.0, hi))


def _solve_levels(instance, opts, upper):
    mask = instance.eligibility()
    reqs = instance.requirements
    cap = instance.bid_cap
    tol = 1e-9 * max(1.0, float(reqs.sum()))
    rho = np.zeros(instance.n_contracts)
    contracts = [i for i in range(instance.n_contracts) if reqs[i] > 0]
    types = list(range(len(instance.compound)))
    iterations = 0
    history = []

    while contracts:
        price = 0.0
        subset, deficit = _max_deficit(instance, mask, contracts, types, price, tol)
        iterations += 1
        if not subset:
            break
        # Dinkelbach: raise the price to the level of the worst set until no set is short
        while True:
            nbrs = _neighbours(mask, subset, types)
            need = float(reqs[subset].sum())
            level = _level_price(instance, nbrs, need, price, cap, tol)
            if level is None or level > upper:
                if math.isinf(upper):
                    ids = [instance.contract_ids[i] for i in subset]
                    capacity = sum(instance.compound[q].curve.capacity for q in nbrs)
                    raise InfeasibleError('contracts %s need %.6g items but at most %.6g can be bought'
                                          % (ids, need, capacity), ids, need, capacity)
                worst, _ = _max_deficit(instance, mask, contracts, types, upper, tol)
                iterations += 1
                subset = worst or subset
                price = upper
                break
            price = level
            worse, deficit = _max_deficit(instance, mask, contracts, types, price, tol)
            iterations += 1
            if iterations > opts.max_iter:
                raise SolverError('price level search did not terminate', {'iterations': iterations,
                                                                          'price': price})
            if not worse:
                break
            subset = worse

        rho[subset] = price
        history.append({'price': price, 'contracts': [instance.contract_ids[i] for i in subset]})
        logger.debug('price level %.6g for contracts %s', price, history[-1]['contracts'])
        removed = set(_neighbours(mask, subset, types))
        contracts = [i for i in contracts if i not in subset]
        types = [q for q in types if q not in removed]

    return rho, iterations, history


# ---------------------------------------------------------- supergradient

def _lift(instance, mu, mask, cap):
    '''
    Smallest uniform raise theta of all mu that makes the supplies routable
    :return: primal upper bound, theta
    '''
    reqs = instance.requirements
    need = float(reqs.sum())
    slack = 1e-9 * max(1.0, need)

    def routed(theta):
        supply = np.array([float(ct.curve.eval(mu[q] + theta)) for q, ct in enumerate(instance.compound)])
        return route_flow(supply, reqs, mask).sum(), supply

    lo, hi = 0.0, cap
    if routed(lo)[0] >= need - slack:
        hi = lo
    else:
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if routed(mid)[0] >= need - slack:
                hi = mid
            else:
                lo = mid
    cost = sum(float(ct.curve.cost(min(max(mu[q] + hi, 0.0), ct.curve.bid_cap)))
               for q, ct in enumerate(instance.compound))
    return cost, hi


def _solve_supergradient(instance, opts, upper):
    mask = instance.eligibility()
    reqs = instance.requirements
    cap = instance.bid_cap
    bound = upper if not math.isinf(upper) else cap
    if math.isinf(upper):
        capacity_check(instance, mask)

    scale = opts.step_a * cap / max(float(reqs.max(initial=0.0)), 1e-12)
    rho = np.zeros(instance.n_contracts)
    avg = rho.copy()
    avg_count = 0
    next_reset = 1
    best_rho, best_dual = rho.copy(), dual_value(instance, rho)
    best_gap = math.inf
    growing, last_gap = 0, math.inf
    history = []
    converged = False

    it = 0
    for it in range(1, opts.max_iter + 1):
        grad, _ = supergradient(instance, rho, opts.tie_tol, mask)
        rho = np.clip(rho + scale / (opts.step_b + it) * grad, 0.0, bound)

        # suffix average restarted at powers of two
        if it == next_reset:
            avg, avg_count = rho.copy(), 1
            next_reset *= 2
        else:
            avg_count += 1
            avg += (rho - avg) / avg_count

        for cand in (rho, avg):
            value = dual_value(instance, cand)
            if value > best_dual:
                best_dual, best_rho = value, cand.copy()

        if it % opts.check_every:
            continue
        primal, theta = _lift(instance, compute_mu(mask, best_rho), mask, cap)
        gap = (primal - best_dual) / max(1.0, abs(primal))
        best_gap = min(best_gap, gap)
        history.append({'iteration': it, 'dual': best_dual, 'primal_bound': primal, 'gap': gap, 'lift': theta})
        if gap <= opts.tol:
            converged = True
            break
        growing = growing + 1 if gap > last_gap else 0
        last_gap = gap
        if growing >= DIVERGENCE_CHECKS:
            raise SolverError('duality gap grew for %d consecutive checks' % growing,
                              {'iteration': it, 'gap': gap, 'best_gap': best_gap, 'dual': best_dual})

    if not converged:
        logger.warning('supergradient ascent hit the iteration cap (%d) with gap %.3e', opts.max_iter, best_gap)
    return best_rho, it, history, converged


def solve_dual(instance, opts, upper=math.inf):
    '''
    Maximise the dual function over 0 <= rho <= upper
    :param instance: PlanningInstance
    :param opts: SolverOptions
    :param upper: cap on pseudo-bids; a finite value is the shortfall penalty weight
    :return: PseudoBids, SolverReport and the FlowPlan recovered from them
    '''
    penalty = not math.isinf(upper)
    mask = instance.eligibility()
    if opts.method == 'levels':
        rho, iterations, history = _solve_levels(instance, opts, upper)
        converged = True
    elif opts.method == 'supergradient':
        rho, iterations, history, converged = _solve_supergradient(instance, opts, upper)
    else:
        raise SolverError('unknown dual method %r' % opts.method)

    pseudo = PseudoBids(rho, compute_mu(mask, rho))
    flow = recover_primal(instance, pseudo, opts.tie_tol)
    gap, primal, dual = duality_gap(instance, pseudo, flow, upper if penalty else None)
    if opts.method == 'levels':
        converged = gap <= max(opts.tol, 1e-6)
        if not converged:
            logger.warning('price levels left a duality gap of %.3e', gap)
    report = SolverReport(opts.method, iterations, dual, primal, gap, converged, penalty, flow.relaxed, history)
    logger.info('%s dual solve: %d iterations, dual %.6g, primal %.6g, gap %.2e',
                opts.method, iterations, dual, primal, gap)
    return pseudo, report, flow
