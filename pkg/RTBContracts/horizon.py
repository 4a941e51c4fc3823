# Copyright (c) 2026 RTBContracts contributors. All rights reserved.

"""
Receding horizon control: bids come from the current plan, which is
recomputed on a fixed cadence (and whenever a contract completes) from the
remaining requirements and the supply left before each deadline.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import List

import numpy as np
from scipy.integrate import quad

from RTBContracts.errors import ParameterError
from RTBContracts.planner import BidPlan, Planner, build_instance

logger = logging.getLogger(__name__)

DEFAULT_REPLAN_HOURS = 1.0
DEFAULT_SAFETY_Z = 3.0
RK4_STEPS = 10000


@dataclass
class ControllerState:
    time: float
    acquired: np.ndarray
    requirements: np.ndarray
    deadlines: np.ndarray
    plan: BidPlan
    replan_interval: float
    next_replan: float = 0.0
    replan_due: bool = True
    replans: int = 0
    discarded: int = 0
    trace: List[dict] = field(default_factory=list)

    @property
    def remaining(self):
        return np.maximum(self.requirements - self.acquired, 0.0)

    @property
    def fulfilled(self):
        return self.acquired >= self.requirements

    def live(self, t):
        """Contracts that can still take items at time t."""
        return (self.deadlines > t) & ~self.fulfilled


class RecedingHorizonController:
    '''
    Tracks acquisitions and replans
    :param contracts: list of Contract, deadlines in hours from the start of the run
    :param decomposition: Decomposition of contracts
    :param curves: per type TimeVaryingSupplyCurve used for planning
    :param planner: Planner, non-strict by default so infeasible replans degrade to best effort
    :param mode: 'dynamic' or 'static' (curves averaged over the remaining horizon)
    :param safety_z: requirement inflation z * sqrt(remaining) for contracts
                     whose deadline falls before the next replan, 0 disables
    '''

    def __init__(self, contracts, decomposition, curves, planner=None, replan_hours=DEFAULT_REPLAN_HOURS,
                 mode='dynamic', safety_z=DEFAULT_SAFETY_Z, start=0.0):
        if replan_hours <= 0:
            raise ParameterError('replan interval must be positive')
        if mode not in ('dynamic', 'static'):
            raise ParameterError('unknown control mode %r' % mode)
        if safety_z < 0:
            raise ParameterError('deadline safety factor must be >= 0')
        self.contracts = list(contracts)
        self.decomposition = decomposition
        self.curves = curves
        self.planner = planner or Planner()
        self.mode = mode
        self.safety_z = safety_z
        self.state = ControllerState(
            time=float(start),
            acquired=np.zeros(len(self.contracts)),
            requirements=np.array([c.requirement for c in self.contracts], dtype=float),
            deadlines=np.array([c.deadline for c in self.contracts], dtype=float),
            plan=BidPlan.empty(decomposition.n_types, start),
            replan_interval=float(replan_hours),
            next_replan=float(start),
        )

    def record_win(self, i, t):
        '''
        Credit one item to contract i at time t
        :return: True when credited, False when the win was discarded
        '''
        state = self.state
        if t < state.time:
            raise ParameterError('win at t=%.6g precedes the last replan at t=%.6g' % (t, state.time))
        if t >= state.deadlines[i]:
            logger.warning('win at t=%.4f for expired contract %r discarded', t, self.contracts[i].id)
            state.discarded += 1
            return False
        was_open = not state.fulfilled[i]
        state.acquired[i] += 1
        if was_open and state.fulfilled[i]:
            logger.debug('contract %r fulfilled at t=%.4f', self.contracts[i].id, t)
            state.replan_due = True
        return True

    def needs_replan(self, t):
        return self.state.replan_due or t >= self.state.next_replan

    def _targets(self, t):
        state = self.state
        include = [i for i in np.nonzero(state.live(t))[0]]
        targets = state.remaining.copy()
        upcoming = t + state.replan_interval
        if self.safety_z > 0:
            for i in include:
                # last replan before the deadline: leave no margin for sampling noise
                if upcoming >= state.deadlines[i]:
                    targets[i] += self.safety_z * math.sqrt(targets[i])
        return [int(i) for i in include], targets

    def replan(self, t):
        '''
        Plan the remaining requirements over [t, latest deadline]
        :return: the new BidPlan, empty once every contract is fulfilled or expired
        '''
        state = self.state
        state.time = float(t)
        state.replan_due = False
        state.next_replan = float(t) + state.replan_interval
        include, targets = self._targets(t)
        if not include:
            state.plan = BidPlan.empty(self.decomposition.n_types, t)
            self._record_trace(t)
            return state.plan

        instance = build_instance(self.contracts, self.decomposition, self.curves, start=t,
                                  requirements=targets, include=include)
        if self.mode == 'static':
            result = self.planner.static(instance)
        else:
            result = self.planner.solve(instance)
        state.plan = result.plan
        state.replans += 1
        logger.debug('replan %d at t=%.3f: %d contracts, cost %.6g', state.replans, t, len(include), result.cost)
        self._record_trace(t)
        return state.plan

    def bid(self, j, t):
        """Nominal bid for type j at t, NaN when nothing should be bought."""
        return self.state.plan.bid_at(j, t)

    def allocation(self, j, t):
        '''
        Allocation probabilities of a type j item won at t over all contracts,
        restricted to live contracts and renormalised
        :return: [N] probabilities summing to 1, or all zero when the item has no taker
        '''
        state = self.state
        plan = state.plan
        probs = np.zeros(len(self.contracts))
        if plan.contract_ids:
            probs[list(plan.contract_ids)] = plan.allocation(j, t)
        probs[~state.live(t)] = 0.0
        total = probs.sum()
        if total <= 0:
            return np.zeros(len(self.contracts))
        return probs / total

    def _record_trace(self, t):
        state = self.state
        bids = [state.plan.bid_at(j, t) for j in range(self.decomposition.n_types)]
        for i, c in enumerate(self.contracts):
            row = {'time': float(t), 'contract_id': c.id, 'acquired': float(state.acquired[i]),
                   'remaining': float(state.remaining[i])}
            row.update({'bid_%d' % j: b for j, b in enumerate(bids)})
            state.trace.append(row)


def expected_path(rate_fn, requirement, deadline, base_rate, n_steps=RK4_STEPS):
    '''
    Mean acquisition path of the receding horizon policy for a lone contract
    with W(x) = 1 - exp(-x), solving c' = rate(t) min(1, (C - c) / (base_rate (T - t)))
    :param rate_fn: arrival rate lambda(t)
    :param base_rate: lambda_0 the plan assumes
    :return: (t [n_steps + 1], c [n_steps + 1])
    '''
    if deadline <= 0 or base_rate <= 0:
        raise ParameterError('deadline and base rate must be positive')

    def deriv(t, c):
        left = deadline - t
        if left <= 0:
            return 0.0
        return rate_fn(t) * min(1.0, max(requirement - c, 0.0) / (base_rate * left))

    h = deadline / n_steps
    ts = np.linspace(0.0, deadline, n_steps + 1)
    cs = np.zeros(n_steps + 1)
    for n in range(n_steps - 1):
        t, c = ts[n], cs[n]
        k1 = deriv(t, c)
        k2 = deriv(t + h / 2, c + h * k1 / 2)
        k3 = deriv(t + h / 2, c + h * k2 / 2)
        k4 = deriv(t + h, c + h * k3)
        cs[n + 1] = c + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6
    # the right hand side is singular at the deadline
    t, c = ts[-2], cs[-2]
    cs[-1] = c + h * deriv(t + h / 2, c + h * deriv(t, c) / 2)
    return ts, cs


def _rate_integral(rate_fn, t, deadline):
    value, _ = quad(lambda s: rate_fn(s) / (deadline - s), 0.0, t, limit=200)
    return value


def closed_form_path(rate_fn, requirement, deadline, base_rate, t):
    '''
    C (1 - exp(-(1 / lambda_0) int_0^t lambda(s) / (T - s) ds)) for t < T
    '''
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty_like(t)
    for n, tn in enumerate(t):
        if tn <= 0:
            out[n] = 0.0
        elif tn >= deadline:
            out[n] = requirement
        else:
            out[n] = requirement * (1.0 - math.exp(-_rate_integral(rate_fn, tn, deadline) / base_rate))
    return out


def static_expected_path(rate_fn, requirement, deadline, base_rate, t):
    '''
    Mean path of a constant bid planned against the average rate:
    c(t) = C / (lambda_0 T) int_0^t lambda(s) ds
    '''
    t = np.atleast_1d(np.asarray(t, dtype=float))
    scale = requirement / (base_rate * deadline)
    return np.array([scale * quad(rate_fn, 0.0, min(max(tn, 0.0), deadline), limit=200)[0] for tn in t])
