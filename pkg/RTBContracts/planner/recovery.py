# Copyright (c) 2026 RTBContracts contributors. All rights reserved.

import logging

import networkx as nx
import numpy as np

from RTBContracts.errors import SupplyExceededError
from RTBContracts.planner.plans import BidPlan, FlowPlan

logger = logging.getLogger(__name__)

FLOW_RESOLUTION = 1e12
RELAXED_TOL = 1e-6


def route_flow(supply, demand, support):
    '''
    Route supply of compound types to contracts along allowed edges
    :param supply: [Q] items available per compound type
    :param demand: [N] items wanted per contract
    :param support: [Q, N] boolean mask of allowed edges
    :return: [N, Q] flows, a maximum flow never exceeding supply or demand
    '''
    supply = np.maximum(np.asarray(supply, dtype=float), 0.0)
    demand = np.maximum(np.asarray(demand, dtype=float), 0.0)
    n_q, n_c = support.shape
    flows = np.zeros((n_c, n_q))
    top = max(float(supply.max(initial=0.0)), float(demand.max(initial=0.0)))
    if top <= 0:
        return flows
    # integer capacities keep the max-flow exact
    scale = FLOW_RESOLUTION / top

    G = nx.DiGraph()
    G.add_node('s')
    G.add_node('t')
    for q in range(n_q):
        G.add_edge('s', ('q', q), capacity=int(round(supply[q] * scale)))
    for i in range(n_c):
        G.add_edge(('c', i), 't', capacity=int(round(demand[i] * scale)))
    for q, i in zip(*np.nonzero(support)):
        G.add_edge(('q', int(q)), ('c', int(i)))

    _, flow_dict = nx.maximum_flow(G, 's', 't')
    for q in range(n_q):
        for node, value in flow_dict[('q', q)].items():
            flows[node[1], q] = value / scale
    return flows


def _argmax_support(mask, rho, mu, tol):
    return mask & (rho[None, :] >= mu[:, None] - tol * np.maximum(1.0, np.abs(mu[:, None])))


def recover_primal(instance, pseudo, tie_tol=1e-9, relax_tol=RELAXED_TOL):
    '''
    Supplies and flows consistent with the pseudo-bids
    :param instance: PlanningInstance
    :param pseudo: PseudoBids from the dual solve
    :return: FlowPlan; flows use only argmax edges unless the plan is flagged relaxed
    '''
    mask = instance.eligibility()
    rho, mu = pseudo.rho, pseudo.mu
    demand = instance.requirements
    n_q = len(instance.compound)
    supply = np.array([ct.curve.eval(mu[q]) for q, ct in enumerate(instance.compound)])

    support = _argmax_support(mask, rho, mu, tie_tol)
    flows = route_flow(supply, demand, support)
    relaxed = False
    need = demand.sum()
    slack = 1e-9 * max(1.0, need)
    if flows.sum() < need - slack:
        for candidate in (_argmax_support(mask, rho, mu, relax_tol), mask):
            alt = route_flow(supply, demand, candidate)
            if alt.sum() > flows.sum() + slack:
                flows, support = alt, candidate
                relaxed = True
            if flows.sum() >= need - slack:
                break
        if relaxed:
            logger.warning('argmax support could not route all requirements, used relaxed support')

    # surplus supply stays with the contracts bidding the max; zero priced ones first
    for q in range(n_q):
        excess = supply[q] - flows[:, q].sum()
        if excess <= 0:
            continue
        owners = np.nonzero(support[q])[0]
        if len(owners) == 0:
            continue
        free = owners[rho[owners] <= 0]
        owners = free if len(free) else owners
        flows[owners, q] += excess / len(owners)

    delivered = flows.sum(axis=1)
    shortfall = np.maximum(demand - delivered, 0.0)
    shortfall[shortfall <= 1e-9 * np.maximum(1.0, demand)] = 0.0
    used = flows > 1e-12 * max(1.0, float(supply.max(initial=0.0)))
    gaps = np.abs(rho[None, :] - mu[:, None]).T
    residuals = {
        'support_violation': float(gaps[used].max(initial=0.0)),
        'slackness': float(np.max(rho * np.abs(delivered - demand), initial=0.0)),
        'shortfall': float(shortfall.sum()),
    }
    return FlowPlan(supply, flows, shortfall, relaxed, residuals)


def plan_from_flow(instance, flow):
    '''
    Bids and allocation probabilities realising a flow plan
    :return: BidPlan with x = W_bar^{-1}(s) and gamma = r / s (0/0 := 0)
    '''
    n_types, n_periods = instance.n_types, instance.n_periods
    bids = np.full((n_types, n_periods), np.nan)
    gamma = np.zeros((instance.n_contracts, n_types, n_periods))
    for q, ct in enumerate(instance.compound):
        s = flow.supply[q]
        if s > ct.curve.capacity * (1 + 1e-9) + 1e-12:
            raise SupplyExceededError(s, ct.curve.capacity)
        bids[ct.j, ct.k] = ct.curve.invert(min(s, ct.curve.capacity))
        if s > 0:
            gamma[:, ct.j, ct.k] = flow.flows[:, q] / s
    return BidPlan(bids, gamma, instance.breakpoints, instance.start, instance.contract_ids)


def plan_cost(instance, flow):
    """Expected spend of a flow plan, the sum of Lambda_bar over compound types."""
    total = 0.0
    for q, ct in enumerate(instance.compound):
        s = min(flow.supply[q], ct.curve.capacity)
        total += ct.curve.cost(ct.curve.invert(s))
    return float(total)
