# Copyright (c) 2026 RTBContracts contributors. All rights reserved.

import heapq
import json
import logging
import os
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional

import numpy as np
import pandas as pd

from RTBContracts.errors import ParameterError

logger = logging.getLogger(__name__)

NORMALIZED_POINTS = 200


class AuctionEvent(NamedTuple):
    time: float
    type: int
    price: float
    bid: float
    won: bool
    contract: Optional[int]


@dataclass
class SimulationResult:
    events: List[AuctionEvent]
    total_cost: float
    contract_ids: tuple
    requirements: np.ndarray
    deadlines: np.ndarray
    t_end: float
    seed: Optional[int] = None
    aborted: bool = False
    error: str = ''
    discarded: int = 0
    metadata: dict = field(default_factory=dict)
    trace: list = field(default_factory=list)
    bid_path: list = field(default_factory=list)

    def win_times(self, i):
        return np.array([e.time for e in self.events if e.won and e.contract == i])

    def acquired(self, i, t):
        """c_i(t), items credited to contract i up to and including t."""
        return int(np.searchsorted(self.win_times(i), t, side='right'))

    def acquired_by_deadline(self):
        return np.array([self.acquired(i, self.deadlines[i]) for i in range(len(self.contract_ids))])

    def fulfilled(self):
        return self.acquired_by_deadline() >= self.requirements

    @property
    def n_wins(self):
        return sum(1 for e in self.events if e.won)

    def to_frame(self):
        ids = self.contract_ids
        return pd.DataFrame({
            't': [e.time for e in self.events],
            'type': [e.type for e in self.events],
            'price': [e.price for e in self.events],
            'bid': [e.bid for e in self.events],
            'won': [e.won for e in self.events],
            'allocated_contract': [None if e.contract is None else ids[e.contract] for e in self.events],
        })


def run(sampler, bidder, t_end, seed=None, rng=None, contracts=(), t_start=0.0):
    '''
    Discrete event auction simulation

    Every type has its own arrival stream; the earliest pending auction is
    settled at the second price: we win when our bid is at least the market
    price and then pay the market price.
    :param sampler: MarketSampler
    :param bidder: object with bid(t, j) -> bid or None and win(t, j, price) -> contract or None
    :param t_end: simulation stops before the first auction at or after t_end
    :param seed: seeds the market stream when rng is not given
    :param contracts: list of Contract the bidder fills, for the result bookkeeping
    :return: SimulationResult, flagged aborted when the bidder raised
    '''
    if t_end <= t_start:
        raise ParameterError('simulation end must lie after its start')
    if rng is None:
        rng = np.random.default_rng(seed)

    queue = []
    for j in range(sampler.n_types):
        dt, price = sampler.sample_event(t_start, j, rng)
        heapq.heappush(queue, (t_start + dt, j, price))

    events = []
    cost = 0.0
    aborted, error = False, ''
    while queue:
        t, j, price = heapq.heappop(queue)
        if t >= t_end:
            break
        try:
            bid = bidder.bid(t, j)
            won = bid is not None and bid >= price
            contract = None
            if won:
                cost += price
                contract = bidder.win(t, j, price)
        except Exception as e:
            logger.error('bidder failed at t=%.4f type %d: %s', t, j, e)
            aborted, error = True, '%s: %s' % (type(e).__name__, e)
            break
        events.append(AuctionEvent(t, j, price, np.nan if bid is None else float(bid), won, contract))
        dt, next_price = sampler.sample_event(t, j, rng)
        heapq.heappush(queue, (t + dt, j, next_price))

    discarded = sum(1 for e in events if e.won and e.contract is None)
    result = SimulationResult(
        events=events,
        total_cost=cost,
        contract_ids=tuple(c.id for c in contracts),
        requirements=np.array([c.requirement for c in contracts], dtype=float),
        deadlines=np.array([c.deadline for c in contracts], dtype=float),
        t_end=float(t_end),
        seed=seed,
        aborted=aborted,
        error=error,
        discarded=discarded,
    )
    controller = getattr(bidder, 'controller', None)
    if controller is not None:
        result.trace = list(controller.state.trace)
    result.bid_path = list(getattr(bidder, 'bid_path', []))
    logger.info('simulated %d auctions to t=%.2f: %d wins, cost %.6g%s', len(events), t_end, result.n_wins,
                cost, ' (aborted)' if aborted else '')
    return result


def normalize(result, n_points=NORMALIZED_POINTS):
    '''
    Normalised acquisition paths c_i(u T_i) / C_i on a shared grid of [0, 1]
    :return: (u [n_points], mean path [n_points], per contract paths [N, n_points])
    '''
    u = np.linspace(0.0, 1.0, n_points)
    n = len(result.contract_ids)
    paths = np.zeros((n, n_points))
    for i in range(n):
        times = result.win_times(i)
        counts = np.searchsorted(times, u * result.deadlines[i], side='right')
        req = result.requirements[i]
        paths[i] = counts / req if req > 0 else 1.0
    mean = paths.mean(axis=0) if n else np.zeros(n_points)
    return u, mean, paths


def summary(result, metadata=None):
    delivered = result.acquired_by_deadline()
    doc = {
        'total_cost': result.total_cost,
        'seed': result.seed,
        'aborted': result.aborted,
        'error': result.error,
        'auctions': len(result.events),
        'wins': result.n_wins,
        'discarded': result.discarded,
        'all_fulfilled': bool(np.all(result.fulfilled())),
        'contracts': [
            {'id': cid, 'requirement': float(result.requirements[i]), 'delivered': int(delivered[i]),
             'fulfilled': bool(delivered[i] >= result.requirements[i])}
            for i, cid in enumerate(result.contract_ids)
        ],
    }
    doc.update(result.metadata)
    doc.update(metadata or {})
    return doc


def write_result(result, out_dir, metadata=None):
    '''
    Write events.csv, bids.csv, trace.csv, normalized.csv and summary.json
    '''
    os.makedirs(out_dir, exist_ok=True)
    result.to_frame().to_csv(os.path.join(out_dir, 'events.csv'), index=False)
    pd.DataFrame(result.bid_path, columns=['time', 'type', 'bid']).to_csv(
        os.path.join(out_dir, 'bids.csv'), index=False)
    pd.DataFrame(result.trace).to_csv(os.path.join(out_dir, 'trace.csv'), index=False)
    u, mean, paths = normalize(result)
    frame = pd.DataFrame({'u': u, 'mean': mean})
    for i, cid in enumerate(result.contract_ids):
        frame['contract_%s' % cid] = paths[i]
    frame.to_csv(os.path.join(out_dir, 'normalized.csv'), index=False)
    with open(os.path.join(out_dir, 'summary.json'), 'w') as f:
        json.dump(summary(result, metadata), f, indent=2)
