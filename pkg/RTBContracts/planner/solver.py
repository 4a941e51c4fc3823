# Copyright (c) 2026 RTBContracts contributors. All rights reserved.

import logging
import math
from dataclasses import asdict, dataclass

import numpy as np

from RTBContracts.errors import InfeasibleError, ParameterError
from RTBContracts.planner.dual import solve_dual
from RTBContracts.planner.PlanningInstance import check_adequate_supply, static_instance
from RTBContracts.planner.plans import BidPlan, FlowPlan, PlanResult, PseudoBids, SolverReport
from RTBContracts.planner.recovery import plan_from_flow

logger = logging.getLogger(__name__)

DEFAULT_PENALTY_WEIGHT = 1e6


@dataclass
class SolverOptions:
    method: str = 'levels'
    max_iter: int = 50000
    tol: float = 1e-6
    step_a: float = 1.0
    step_b: float = 10.0
    check_every: int = 50
    strict: bool = False
    penalty_weight: float = DEFAULT_PENALTY_WEIGHT
    tie_tol: float = 1e-9

    def __post_init__(self):
        if self.method not in ('levels', 'supergradient'):
            raise ParameterError('solver method must be "levels" or "supergradient"')
        if self.max_iter < 1 or self.check_every < 1:
            raise ParameterError('max_iter and check_every must be positive')
        if self.tol <= 0 or self.step_a <= 0 or self.step_b <= 0:
            raise ParameterError('tol and step schedule constants must be positive')
        if self.penalty_weight <= 0:
            raise ParameterError('penalty weight must be positive')

    def to_dict(self):
        return asdict(self)


def _trivial_result(instance):
    n_q = len(instance.compound)
    flow = FlowPlan(np.zeros(n_q), np.zeros((instance.n_contracts, n_q)), np.zeros(instance.n_contracts))
    pseudo = PseudoBids(np.zeros(instance.n_contracts), np.zeros(n_q))
    report = SolverReport('none', dual_value=0.0, primal_value=0.0, gap=0.0, converged=True,
                          message='nothing left to plan')
    if instance.n_contracts == 0:
        plan = BidPlan.empty(instance.n_types, instance.start)
    else:
        plan = plan_from_flow(instance, flow)
    return PlanResult(instance, pseudo, flow, plan, report, check_adequate_supply(instance))


class Planner:
    '''
    Plans bids for a PlanningInstance. Strict planning raises on infeasible
    instances, otherwise they fall back to the shortfall-penalised problem.
    '''

    def __init__(self, opt: SolverOptions = None):
        self.opt = opt or SolverOptions()

    def _finish(self, instance, pseudo, report, flow):
        plan = plan_from_flow(instance, flow)
        if flow.shortfall.sum() > 0:
            report.message = 'best effort plan, total shortfall %.6g items' % flow.shortfall.sum()
            logger.warning(report.message)
        return PlanResult(instance, pseudo, flow, plan, report, check_adequate_supply(instance))

    def penalty(self, instance, weight=None):
        weight = self.opt.penalty_weight if weight is None else weight
        if weight <= 0:
            raise ParameterError('penalty weight must be positive')
        if instance.n_contracts == 0 or not np.any(instance.requirements > 0):
            return _trivial_result(instance)
        pseudo, report, flow = solve_dual(instance, self.opt, upper=weight)
        return self._finish(instance, pseudo, report, flow)

    def solve(self, instance, strict=None):
        strict = self.opt.strict if strict is None else strict
        if instance.n_contracts == 0 or not np.any(instance.requirements > 0):
            return _trivial_result(instance)
        try:
            pseudo, report, flow = solve_dual(instance, self.opt, upper=math.inf)
        except InfeasibleError as e:
            if strict:
                raise
            logger.warning('%s; planning best effort with penalty weight %g', e, self.opt.penalty_weight)
            return self.penalty(instance)
        return self._finish(instance, pseudo, report, flow)

    def static(self, instance, strict=None):
        return self.solve(static_instance(instance), strict)


def penalty_solve(instance, weight=DEFAULT_PENALTY_WEIGHT, opt=None):
    '''
    Minimise acquisition cost plus weight times total shortfall
    :return: FlowPlan
    '''
    return Planner(opt).penalty(instance, weight).flow


def static_plan(instance, opt=None):
    '''
    Plan against curves averaged over the whole horizon, the baseline the
    dynamic plan is compared with
    :return: BidPlan
    '''
    return Planner(opt).static(instance).plan
