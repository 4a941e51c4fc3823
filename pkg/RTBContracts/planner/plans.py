# Copyright (c) 2026 RTBContracts contributors. All rights reserved.

import json
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np


@dataclass
class PseudoBids:
    """rho: [N] per contract; mu: [Q] per compound type, max of eligible rho."""
    rho: np.ndarray
    mu: np.ndarray


@dataclass
class FlowPlan:
    """supply: [Q] items per compound type; flows: [N, Q] items routed to each contract."""
    supply: np.ndarray
    flows: np.ndarray
    shortfall: np.ndarray
    relaxed: bool = False
    residuals: dict = field(default_factory=dict)
    info: dict = field(default_factory=dict)

    def delivered(self):
        return self.flows.sum(axis=1)


@dataclass
class BidPlan:
    '''
    Piecewise constant bids and allocation probabilities
    bids: [M, K], NaN where type j has no eligible contract in period k
    gamma: [N, M, K]
    breakpoints: period ends T_1..T_K (absolute hours), periods start at ``start``
    contract_ids: positions of the N planned contracts in the contract list, in row order of gamma
    '''
    bids: np.ndarray
    gamma: np.ndarray
    breakpoints: tuple
    start: float
    contract_ids: tuple

    @classmethod
    def empty(cls, n_types, start=0.0):
        return cls(np.full((n_types, 0), np.nan), np.zeros((0, n_types, 0)), (), float(start), ())

    @property
    def n_periods(self):
        return len(self.breakpoints)

    def period_index(self, t):
        '''
        :param t: absolute time
        :return: k with T_{k-1} <= t < T_k, or None outside the plan
        '''
        if t < self.start or not self.breakpoints or t >= self.breakpoints[-1]:
            return None
        return int(np.searchsorted(self.breakpoints, t, side='right'))

    def bid_at(self, j, t):
        k = self.period_index(t)
        if k is None or j >= self.bids.shape[0]:
            return float('nan')
        return float(self.bids[j, k])

    def allocation(self, j, t):
        k = self.period_index(t)
        if k is None:
            return np.zeros(len(self.contract_ids))
        return self.gamma[:, j, k]


@dataclass
class SolverReport:
    method: str
    iterations: int = 0
    dual_value: float = float('nan')
    primal_value: float = float('nan')
    gap: float = float('nan')
    converged: bool = False
    penalty: bool = False
    relaxed_support: bool = False
    history: list = field(default_factory=list)
    message: str = ''


@dataclass
class PlanResult:
    instance: object
    pseudo: Optional[PseudoBids]
    flow: Optional[FlowPlan]
    plan: BidPlan
    report: SolverReport
    adequacy: list = field(default_factory=list)

    @property
    def cost(self):
        return self.report.primal_value


def _nan_to_none(arr):
    return [[None if np.isnan(v) else float(v) for v in row] for row in np.asarray(arr)]


def plan_to_dict(result: PlanResult):
    plan, report = result.plan, result.report
    doc = {
        'start_hours': plan.start,
        'breakpoints_hours': list(plan.breakpoints),
        'contract_ids': list(plan.contract_ids),
        'bids': _nan_to_none(plan.bids),
        'gamma': plan.gamma.tolist(),
        'pseudo_bids': [] if result.pseudo is None else result.pseudo.rho.tolist(),
        'dual_gap': report.gap,
        'solver_iterations': report.iterations,
        'solver': {
            'method': report.method,
            'converged': report.converged,
            'dual_value': report.dual_value,
            'primal_value': report.primal_value,
            'penalty': report.penalty,
            'relaxed_support': report.relaxed_support,
            'message': report.message,
        },
        'shortfall': [] if result.flow is None else result.flow.shortfall.tolist(),
        'adequate_supply': result.adequacy,
    }
    return doc


def save_plan(result: PlanResult, path):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, 'w') as f:
        json.dump(plan_to_dict(result), f, indent=2)


def plan_from_dict(doc):
    bids = np.array([[np.nan if v is None else v for v in row] for row in doc['bids']], dtype=float)
    gamma = np.asarray(doc['gamma'], dtype=float)
    if bids.size == 0:
        bids = bids.reshape(0, 0)
    return BidPlan(bids, gamma, tuple(doc['breakpoints_hours']), float(doc.get('start_hours', 0.0)),
                   tuple(doc.get('contract_ids', ())))


def load_plan(path):
    with open(path) as f:
        return plan_from_dict(json.load(f))


def format_summary(result: PlanResult):
    plan, report = result.plan, result.report
    lines = ['plan from t=%.2f h, %d contracts, %d periods' % (plan.start, len(plan.contract_ids), plan.n_periods),
             'solver=%s iterations=%d converged=%s penalty=%s gap=%.3e' % (
                 report.method, report.iterations, report.converged, report.penalty, report.gap),
             'expected cost %.6g, dual value %.6g' % (report.primal_value, report.dual_value)]
    for row in result.adequacy:
        lines.append('adequate supply type %d: %s (capacity %.6g vs demand %.6g, margin %.6g)' % (
            row['type'], 'pass' if row['passed'] else 'FAIL', row['capacity'], row['demand'], row['margin']))
    header = 'period end (h)  ' + '  '.join('type %-4d' % j for j in range(plan.bids.shape[0]))
    lines.append(header)
    for k, end in enumerate(plan.breakpoints):
        cells = '  '.join('%9s' % ('-' if np.isnan(plan.bids[j, k]) else '%.4f' % plan.bids[j, k])
                          for j in range(plan.bids.shape[0]))
        lines.append('%14.2f  %s' % (end, cells))
    return '\n'.join(lines)
