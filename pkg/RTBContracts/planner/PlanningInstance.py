# Copyright (c) 2026 RTBContracts contributors. All rights reserved.

import logging
from dataclasses import dataclass, field
from typing import Mapping, Tuple

import numpy as np

from RTBContracts.errors import ConfigurationError, ParameterError
from RTBContracts.supply.SupplySlice import SupplySlice

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CompoundType:
    """Items of type j arriving in period k, with the planned contracts allowed to use them."""
    j: int
    k: int
    curve: SupplySlice
    eligible: Tuple[int, ...]


@dataclass(frozen=True)
class PlanningInstance:
    '''
    Finite convex planning problem over [start, T_K]
    contract_ids: positions of the planned contracts in the caller's contract list
    requirements, deadlines: [N] per planned contract
    breakpoints: distinct deadlines T_1 < ... < T_K, all > start
    compound: admissible (type, period) pairs with aggregated curves
    type_contracts: B_j restricted to planned contracts (local indices)
    '''
    start: float
    breakpoints: Tuple[float, ...]
    contract_ids: Tuple[int, ...]
    requirements: np.ndarray
    deadlines: np.ndarray
    n_types: int
    compound: Tuple[CompoundType, ...]
    type_contracts: Tuple[Tuple[int, ...], ...]
    mode: str = 'dynamic'
    sources: Mapping = field(default_factory=dict, repr=False)

    @property
    def n_contracts(self):
        return len(self.contract_ids)

    @property
    def n_periods(self):
        return len(self.breakpoints)

    @property
    def bid_cap(self):
        if not self.compound:
            return 0.0
        return max(q.curve.bid_cap for q in self.compound)

    @property
    def period_bounds(self):
        edges = (self.start,) + tuple(self.breakpoints)
        return list(zip(edges[:-1], edges[1:]))

    def eligibility(self):
        """[Q, N] boolean mask of contracts allowed to draw from each compound type."""
        mask = np.zeros((len(self.compound), self.n_contracts), dtype=bool)
        for q, ct in enumerate(self.compound):
            mask[q, list(ct.eligible)] = True
        return mask

    def with_requirements(self, requirements):
        requirements = np.asarray(requirements, dtype=float)
        if requirements.shape != self.requirements.shape:
            raise ParameterError('requirement vector has the wrong length')
        return PlanningInstance(self.start, self.breakpoints, self.contract_ids, requirements, self.deadlines,
                                self.n_types, self.compound, self.type_contracts, self.mode, self.sources)


def _curve_for(curves, j):
    try:
        curve = curves[j]
    except (KeyError, IndexError):
        curve = None
    if curve is None:
        raise ConfigurationError('no supply curve for item type %d' % j)
    return curve


def build_instance(contracts, decomposition, curves, start=0.0, requirements=None, include=None, mode='dynamic'):
    '''
    Assemble the planning problem seen at time ``start``
    :param contracts: list of Contract (deadlines in absolute hours)
    :param decomposition: Decomposition of the same list
    :param curves: per type TimeVaryingSupplyCurve, indexable by type index
    :param requirements: remaining requirement per contract, defaults to C_i
    :param include: contract positions to plan for, defaults to all not yet expired
    :param mode: 'dynamic' aggregates each period, 'static' spreads the curve
                 averaged over [start, T_K] uniformly over the periods
    :return: PlanningInstance
    '''
    if mode not in ('dynamic', 'static'):
        raise ParameterError('unknown planning mode %r' % mode)
    if requirements is None:
        requirements = [c.requirement for c in contracts]
    requirements = np.asarray(requirements, dtype=float)
    if include is None:
        include = [i for i, c in enumerate(contracts) if c.deadline > start]
    include = sorted(i for i in include if contracts[i].deadline > start)

    local = {i: n for n, i in enumerate(include)}
    deadlines = np.array([contracts[i].deadline for i in include], dtype=float)
    reqs = np.array([max(requirements[i], 0.0) for i in include], dtype=float)
    breakpoints = tuple(sorted(set(deadlines.tolist())))

    type_contracts = tuple(
        tuple(local[i] for i in members if i in local) for members in decomposition.type_contracts
    )

    edges = (float(start),) + breakpoints
    horizon_end = edges[-1]
    sources = {}
    averages = {}
    compound = []
    for j, members in enumerate(type_contracts):
        if not members:
            continue
        curve = _curve_for(curves, j)
        sources[j] = curve
        if mode == 'static':
            averages[j] = curve.average(start, horizon_end)
        for k, (a, b) in enumerate(zip(edges[:-1], edges[1:])):
            eligible = tuple(n for n in members if deadlines[n] >= b)
            if not eligible:
                continue
            if mode == 'static':
                agg = averages[j].scaled(b - a)
            else:
                agg = curve.aggregate(a, b)
            compound.append(CompoundType(j, k, agg, eligible))

    logger.debug('instance at t=%.3f: %d contracts, %d periods, %d compound types (%s)',
                  start, len(include), len(breakpoints), len(compound), mode)
    return PlanningInstance(float(start), breakpoints, tuple(include), reqs, deadlines,
                            decomposition.n_types, tuple(compound), type_contracts, mode, sources)


def check_adequate_supply(instance: PlanningInstance):
    '''
    Per type comparison of the supply available at the bid cap before the
    earliest deadline among its contracts against their total requirement
    :return: list of dicts {type, horizon, capacity, demand, margin, passed}
    '''
    report = []
    for j, members in enumerate(instance.type_contracts):
        if not members:
            continue
        horizon = float(min(instance.deadlines[n] for n in members))
        capacity = sum(ct.curve.capacity for ct in instance.compound
                       if ct.j == j and instance.breakpoints[ct.k] <= horizon)
        demand = float(sum(instance.requirements[n] for n in members))
        report.append({
            'type': j,
            'horizon': horizon,
            'capacity': float(capacity),
            'demand': demand,
            'margin': float(capacity - demand),
            'passed': bool(capacity > demand),
        })
    return report


def static_instance(instance: PlanningInstance):
    '''
    The same problem with every type's curve averaged over [start, T_K]
    and spread uniformly over the periods
    '''
    if instance.mode == 'static' or not instance.compound:
        return instance
    horizon_end = instance.breakpoints[-1]
    averages = {j: curve.average(instance.start, horizon_end) for j, curve in instance.sources.items()}
    bounds = instance.period_bounds
    compound = tuple(
        CompoundType(ct.j, ct.k, averages[ct.j].scaled(bounds[ct.k][1] - bounds[ct.k][0]), ct.eligible)
        for ct in instance.compound
    )
    return PlanningInstance(instance.start, instance.breakpoints, instance.contract_ids, instance.requirements,
                            instance.deadlines, instance.n_types, compound, instance.type_contracts, 'static',
                            instance.sources)
