# Copyright (c) 2026 RTBContracts contributors. All rights reserved.

"""
Win probabilities of a single bidder facing an exogenous second price market.

A participant with bid b and participation rate r enters each auction with
probability r; we win whenever no entering participant bids strictly more
than we do.
"""
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from RTBContracts.errors import ParameterError


@dataclass(frozen=True)
class MarketParticipant:
    bid: float
    rate: float

    def __post_init__(self):
        if not 0.0 < self.rate < 1.0:
            raise ParameterError('participation rate must lie in (0, 1), got %r' % self.rate)
        if self.bid < 0:
            raise ParameterError('participant bid must be non-negative, got %r' % self.bid)

    @property
    def hazard(self):
        return -np.log1p(-self.rate)


@dataclass(frozen=True)
class SteadyStateMarket:
    """
    Poisson population of participants.

    bid_sampler and rate_sampler are optional ``f(rng, size) -> ndarray``
    draws from F_B and F_R; only the Monte-Carlo estimator needs them.
    """
    participant_rate: float
    bid_cdf: Callable[[np.ndarray], np.ndarray]
    mean_rate: float
    bid_sampler: Optional[Callable] = None
    rate_sampler: Optional[Callable] = None

    def __post_init__(self):
        if self.participant_rate < 0:
            raise ParameterError('participant rate must be >= 0')
        if not 0.0 < self.mean_rate < 1.0:
            raise ParameterError('mean participation rate must lie in (0, 1)')


def fixed_market_win_prob(participants: Sequence[MarketParticipant], x):
    '''
    Probability of winning one auction against a fixed set of participants
    :param participants: list of MarketParticipant
    :param x: our bid, scalar or array
    :return: exp(-sum phi(r_i) 1[b_i > x]) for x >= 0 and 0 for x < 0
    '''
    x = np.asarray(x, dtype=float)
    exponent = np.zeros_like(x)
    for p in participants:
        # ties go to us: only strictly larger bids count
        exponent = exponent + p.hazard * (p.bid > x)
    prob = np.exp(-exponent)
    prob = np.where(x < 0, 0.0, prob)
    return float(prob) if prob.ndim == 0 else prob


def steady_state_win_prob(market: SteadyStateMarket, x):
    x = np.asarray(x, dtype=float)
    above = 1.0 - np.clip(np.asarray(market.bid_cdf(x), dtype=float), 0.0, 1.0)
    prob = np.exp(-market.participant_rate * above * market.mean_rate)
    return float(prob) if prob.ndim == 0 else prob


def exponential_market(participant_rate, bid_scale, mean_rate):
    """Steady-state market with exponential bids and Beta distributed rates of the given mean."""
    beta = 2.0 * (1.0 - mean_rate) / mean_rate

    def bid_cdf(x):
        x = np.asarray(x, dtype=float)
        return np.where(x < 0, 0.0, -np.expm1(-np.maximum(x, 0.0) / bid_scale))

    return SteadyStateMarket(
        participant_rate=participant_rate,
        bid_cdf=bid_cdf,
        mean_rate=mean_rate,
        bid_sampler=lambda rng, size: rng.exponential(bid_scale, size),
        rate_sampler=lambda rng, size: rng.beta(2.0, beta, size),
    )


def _win_frequency(counts, bids, rates, coins, levels):
    trials = len(counts)
    owner = np.repeat(np.arange(trials), counts)
    freq = np.empty(len(levels))
    for n, x in enumerate(levels):
        threat = (bids > x) & (coins < rates)
        lost = np.bincount(owner[threat], minlength=trials) > 0
        freq[n] = 1.0 - lost.mean()
    return freq


def sample_fixed_market(participants, levels, trials, rng):
    '''
    Monte-Carlo estimate of the fixed-market win probability
    :param levels: bid levels to evaluate
    :param trials: number of simulated auctions
    :param rng: numpy Generator
    :return: empirical win frequency per level
    '''
    levels = np.atleast_1d(np.asarray(levels, dtype=float))
    n = len(participants)
    counts = np.full(trials, n)
    bids = np.tile([p.bid for p in participants], trials)
    rates = np.tile([p.rate for p in participants], trials)
    coins = rng.random(n * trials)
    freq = _win_frequency(counts, bids, rates, coins, levels)
    return np.where(levels < 0, 0.0, freq)


def sample_steady_state_market(market: SteadyStateMarket, levels, trials, rng):
    if market.bid_sampler is None or market.rate_sampler is None:
        raise ParameterError('market has no samplers attached')
    levels = np.atleast_1d(np.asarray(levels, dtype=float))
    counts = rng.poisson(market.participant_rate, trials)
    total = int(counts.sum())
    bids = np.asarray(market.bid_sampler(rng, total), dtype=float)
    rates = np.asarray(market.rate_sampler(rng, total), dtype=float)
    coins = rng.random(total)
    return _win_frequency(counts, bids, rates, coins, levels)
