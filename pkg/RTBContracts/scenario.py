# Copyright (c) 2026 RTBContracts contributors. All rights reserved.

"""
Synthetic market for the six contract reference campaign: five atoms with
sinusoidal daily arrival rates and exponential market prices whose scale
moves against the traffic.
"""
import logging
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from RTBContracts.errors import ParameterError
from RTBContracts.estimation import build_periodic_curve
from RTBContracts.grid import DEFAULT_RESOLUTION, create_bid_grid, create_time_knots
from RTBContracts.simulator.MarketSampler import HOURS_PER_DAY
from RTBContracts.supply.SupplyCurve import TimeVaryingSupplyCurve, combine_curves
from RTBContracts.targeting import Contract, decompose

logger = logging.getLogger(__name__)

# (deadline hours, requirement, targeted atoms)
CAMPAIGN = (
    (28.0, 4500.0, ('1', '3')),
    (31.0, 3240.0, ('1', '5')),
    (43.0, 6300.0, ('2', '3', '5')),
    (56.0, 3600.0, ('1', '4')),
    (63.0, 1800.0, ('3',)),
    (71.0, 3600.0, ('3', '5')),
)


def campaign_contracts(scale=1.0):
    if scale <= 0:
        raise ParameterError('requirement scale must be positive')
    return [Contract(i + 1, deadline, round(req * scale), frozenset(atoms))
            for i, (deadline, req, atoms) in enumerate(CAMPAIGN)]


@dataclass
class SyntheticMarketSpec:
    '''
    lambda_a(t) = base_a (1 + rate_swing sin(2 pi (t - phase_a) / 24)) and
    market prices Exponential(scale_a(t)) with
    scale_a(t) = price_scale (1 - price_swing sin(2 pi (t - phase_a) / 24))
    '''
    atoms: Tuple[str, ...] = ('1', '2', '3', '4', '5')
    base_rates: Tuple[float, ...] = (50.0, 30.0, 60.0, 40.0, 50.0)
    phases: Tuple[float, ...] = (0.0, 5.0, 10.0, 15.0, 20.0)
    rate_swing: float = 0.5
    price_scale: float = 50.0
    price_swing: float = 0.3
    sigma: float = 2.0
    x_max: float = None
    resolution: int = DEFAULT_RESOLUTION
    knot_step: float = 1.0

    def __post_init__(self):
        if not len(self.atoms) == len(self.base_rates) == len(self.phases):
            raise ParameterError('atoms, base rates and phases must have equal length')
        if not 0 <= self.rate_swing < 1 or not 0 <= self.price_swing < 1:
            raise ParameterError('swings must lie in [0, 1)')
        if self.x_max is None:
            self.x_max = 8.0 * self.price_scale * (1.0 + self.price_swing)

    def _wave(self, a, t):
        return np.sin(2.0 * np.pi * (np.asarray(t, dtype=float) - self.phases[a]) / HOURS_PER_DAY)

    def rate(self, a, t):
        return self.base_rates[a] * (1.0 + self.rate_swing * self._wave(a, t))

    def scale(self, a, t):
        return self.price_scale * (1.0 - self.price_swing * self._wave(a, t))

    def win_prob(self, a, x, t):
        x = np.asarray(x, dtype=float)
        return np.where(x > 0, -np.expm1(-np.maximum(x, 0.0) / self.scale(a, t)), 0.0)


@dataclass
class Scenario:
    contracts: List[Contract]
    decomposition: object
    planning_curves: list
    market_curves: list
    spec: SyntheticMarketSpec = field(default_factory=SyntheticMarketSpec)


def atom_curves(spec: SyntheticMarketSpec):
    '''
    :return: (market, planning) dicts atom -> TimeVaryingSupplyCurve; market
             curves are the raw price distributions, planning curves are
             smoothed with the bid noise sigma
    '''
    grid_x = create_bid_grid(spec.x_max, 0.0, spec.resolution, x_min=0.0)
    knots = create_time_knots(HOURS_PER_DAY, spec.knot_step)
    hours = np.arange(HOURS_PER_DAY, dtype=float)
    market, planning = {}, {}
    for a, atom in enumerate(spec.atoms):
        market[atom] = TimeVaryingSupplyCurve.from_function(
            grid_x, knots, lambda x, t, a=a: spec.win_prob(a, x, t), lambda t, a=a: spec.rate(a, t),
            period_hours=float(HOURS_PER_DAY), name=atom)
        hourly = np.stack([spec.win_prob(a, grid_x, t) for t in hours])
        planning[atom] = build_periodic_curve(spec.rate(a, hours), hourly, grid_x, spec.sigma, name=atom)
    return market, planning


def type_curves(decomposition, by_atom):
    """Per item type curve, the combination of its atoms' curves."""
    curves = []
    for j, atoms in enumerate(decomposition.types):
        missing = [a for a in atoms if a not in by_atom]
        if missing:
            raise ParameterError('no market for atoms %s of type %d' % (missing, j))
        curves.append(combine_curves([by_atom[a] for a in sorted(atoms)], name=','.join(sorted(atoms))))
    return curves


def campaign_scenario(spec=None, requirement_scale=0.1, contracts=None):
    spec = spec or SyntheticMarketSpec()
    contracts = contracts if contracts is not None else campaign_contracts(requirement_scale)
    decomposition = decompose(contracts)
    market, planning = atom_curves(spec)
    logger.info('synthetic scenario: %d contracts, %d item types', len(contracts), decomposition.n_types)
    return Scenario(contracts, decomposition, type_curves(decomposition, planning),
                    type_curves(decomposition, market), spec)
