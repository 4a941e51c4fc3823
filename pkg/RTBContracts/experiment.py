# Copyright (c) 2026 RTBContracts contributors. All rights reserved.

"""
Sliding window experiments: every (window, repeat) pair is simulated once per
policy on the same market event stream, and the runs are aggregated into
average costs, fulfilment rates and mean normalised acquisition paths.
"""
import functools
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List

import numpy as np
import pandas as pd
from tqdm import tqdm

from RTBContracts.errors import ConfigurationError, InputError, ParameterError
from RTBContracts.horizon import DEFAULT_REPLAN_HOURS, DEFAULT_SAFETY_Z, RecedingHorizonController
from RTBContracts.log_util import progress_disabled
from RTBContracts.planner import Planner, SolverOptions
from RTBContracts.simulator import PlanBidder, normalize, run, write_result
from RTBContracts.simulator.MarketSampler import MarketSampler

logger = logging.getLogger(__name__)

POLICIES = ('dynamic', 'static')
BOOTSTRAP_RESAMPLES = 2000


@dataclass
class WindowSpec:
    length: float = 72.0
    stride: float = 12.0
    count: int = 9
    repeats: int = 4

    def __post_init__(self):
        if self.length <= 0 or self.stride <= 0:
            raise ConfigurationError('window length and stride must be positive')
        if self.count < 1 or self.repeats < 1:
            raise ConfigurationError('window count and repeats must be >= 1')

    def starts(self):
        return [k * self.stride for k in range(self.count)]

    @property
    def span(self):
        return (self.count - 1) * self.stride + self.length


@dataclass
class ControlOptions:
    replan_hours: float = DEFAULT_REPLAN_HOURS
    sigma: float = 2.0
    deadline_safety_z: float = DEFAULT_SAFETY_Z

    def __post_init__(self):
        if self.replan_hours <= 0:
            raise ConfigurationError('replan interval must be positive')
        if self.sigma < 0:
            raise ConfigurationError('sigma must be >= 0')
        if self.deadline_safety_z < 0:
            raise ConfigurationError('deadline safety factor must be >= 0')


class ShiftedSampler(MarketSampler):
    """A sampler seen from a clock starting ``offset`` hours later."""

    def __init__(self, sampler, offset):
        self.sampler = sampler
        self.offset = float(offset)

    @property
    def n_types(self):
        return self.sampler.n_types

    def sample_event(self, t, j, rng):
        return self.sampler.sample_event(t + self.offset, j, rng)


@dataclass
class ExperimentContext:
    '''
    Everything a run needs
    contracts: deadlines relative to the window start
    planning_curves: per type curves on the absolute clock
    sampler: market sampler on the absolute clock
    origin: absolute time of the first window start
    '''
    contracts: list
    decomposition: object
    planning_curves: list
    sampler: MarketSampler
    origin: float = 0.0
    solver: SolverOptions = field(default_factory=SolverOptions)
    control: ControlOptions = field(default_factory=ControlOptions)


@dataclass(frozen=True)
class RunJob:
    policy: str
    window: int
    repeat: int
    start: float
    seed: int


def run_streams(seed, window, repeat):
    '''
    Independent generators for the market and the bidder; the market stream
    depends only on (seed, window, repeat) so every policy faces the same auctions
    '''
    market, bidder = np.random.SeedSequence([int(seed), int(window), int(repeat)]).spawn(2)
    return np.random.default_rng(market), np.random.default_rng(bidder)


def run_job(ctx: ExperimentContext, length, job: RunJob):
    start = ctx.origin + job.start
    curves = [c.shifted(start) for c in ctx.planning_curves]
    market_rng, bidder_rng = run_streams(job.seed, job.window, job.repeat)
    controller = RecedingHorizonController(ctx.contracts, ctx.decomposition, curves, Planner(ctx.solver),
                                           replan_hours=ctx.control.replan_hours, mode=job.policy,
                                           safety_z=ctx.control.deadline_safety_z)
    bidder = PlanBidder(controller, ctx.control.sigma, bidder_rng)
    result = run(ShiftedSampler(ctx.sampler, start), bidder, length, seed=job.seed, rng=market_rng,
                 contracts=ctx.contracts)
    result.metadata.update({'policy': job.policy, 'window': job.window, 'repeat': job.repeat,
                            'window_start_hours': start, 'replans': controller.state.replans})
    return result


def _row(job, result):
    delivered = result.acquired_by_deadline()
    fulfilled = result.fulfilled()
    return {
        'policy': job.policy,
        'window': job.window,
        'repeat': job.repeat,
        'start_hours': job.start,
        'seed': job.seed,
        'total_cost': result.total_cost,
        'wins': result.n_wins,
        'discarded': result.discarded,
        'all_fulfilled': bool(np.all(fulfilled)),
        'fulfilled_fraction': float(np.mean(fulfilled)) if len(fulfilled) else 1.0,
        'delivered': int(delivered.sum()),
        'replans': result.metadata.get('replans', 0),
        'aborted': result.aborted,
    }


@dataclass
class ExperimentResult:
    runs: pd.DataFrame
    aggregate: dict
    normalized: pd.DataFrame
    comparison: pd.DataFrame = None
    results: List = field(default_factory=list, repr=False)


def aggregate_runs(runs):
    out = {}
    for policy, group in runs.groupby('policy', sort=True):
        costs = group['total_cost'].to_numpy()
        out[policy] = {
            'runs': int(len(group)),
            'J_avg': float(costs.mean()),
            'median_cost': float(np.median(costs)),
            'fulfilment_rate': float(group['all_fulfilled'].mean()),
            'aborted': int(group['aborted'].sum()),
        }
    return out


def paired_costs(runs, policy_a='dynamic', policy_b='static'):
    '''
    One row per (window, repeat) with both policies' costs
    :return: DataFrame [window, repeat, cost_a, cost_b, relative, a_cheaper]
    '''
    a = runs[runs['policy'] == policy_a][['window', 'repeat', 'total_cost', 'all_fulfilled']]
    b = runs[runs['policy'] == policy_b][['window', 'repeat', 'total_cost', 'all_fulfilled']]
    pairs = a.merge(b, on=['window', 'repeat'], suffixes=('_' + policy_a, '_' + policy_b))
    cost_a = pairs['total_cost_' + policy_a].to_numpy()
    cost_b = pairs['total_cost_' + policy_b].to_numpy()
    safe = np.where(cost_b > 0, cost_b, 1.0)
    pairs['relative_saving'] = np.where(cost_b > 0, (cost_b - cost_a) / safe, 0.0)
    pairs[policy_a + '_cheaper'] = cost_a < cost_b
    return pairs


def run_experiment(ctx: ExperimentContext, windows: WindowSpec, seed, policies=POLICIES, workers=1,
                   out_dir=None, metadata=None):
    '''
    Simulate every policy on every (window, repeat)
    :param workers: processes; 1 runs in this process
    :param out_dir: when given, per run files plus runs.csv, aggregate.json,
                    normalized.csv and comparison.csv are written there
    :return: ExperimentResult
    '''
    for p in policies:
        if p not in POLICIES:
            raise ParameterError('unknown policy %r' % p)
    latest = max(c.deadline for c in ctx.contracts)
    if latest > windows.length:
        raise ConfigurationError('window of %g h is shorter than the latest deadline %g h'
                                 % (windows.length, latest))

    jobs = [RunJob(p, w, r, start, int(seed))
            for w, start in enumerate(windows.starts()) for r in range(windows.repeats) for p in policies]
    task = functools.partial(run_job, ctx, windows.length)
    bar = dict(total=len(jobs), desc='simulate', disable=progress_disabled())
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(tqdm(pool.map(task, jobs), **bar))
    else:
        results = [task(job) for job in tqdm(jobs, **bar)]

    runs = pd.DataFrame([_row(job, res) for job, res in zip(jobs, results)])
    agg = aggregate_runs(runs)
    normalized = pd.DataFrame({'u': normalize(results[0])[0]})
    for p in policies:
        paths = [normalize(res)[1] for job, res in zip(jobs, results) if job.policy == p]
        normalized['mean_' + p] = np.mean(paths, axis=0)
    comparison = paired_costs(runs) if set(POLICIES) <= set(policies) else None
    if comparison is not None:
        agg['dynamic']['strictly_cheaper_share'] = float(comparison['dynamic_cheaper'].mean())
    for p, stats in agg.items():
        logger.info('%s: J_avg %.6g, median %.6g, fulfilment %.2f over %d runs', p, stats['J_avg'],
                    stats['median_cost'], stats['fulfilment_rate'], stats['runs'])

    if out_dir is not None:
        meta = dict(metadata or {})
        for job, res in zip(jobs, results):
            run_dir = os.path.join(out_dir, 'runs', '%s_w%02d_r%d' % (job.policy, job.window, job.repeat))
            write_result(res, run_dir, meta)
        runs.to_csv(os.path.join(out_dir, 'runs.csv'), index=False)
        normalized.to_csv(os.path.join(out_dir, 'normalized.csv'), index=False)
        if comparison is not None:
            comparison.to_csv(os.path.join(out_dir, 'comparison.csv'), index=False)
        with open(os.path.join(out_dir, 'aggregate.json'), 'w') as f:
            json.dump({'policies': agg, **meta}, f, indent=2)
    return ExperimentResult(runs, agg, normalized, comparison, results)


def _load_runs(path):
    runs_csv = os.path.join(path, 'runs.csv')
    if not os.path.isfile(runs_csv):
        raise InputError('%s is not a results directory (no runs.csv)' % path)
    return pd.read_csv(runs_csv)


def _pick_policy(runs, policy, path):
    present = sorted(runs['policy'].unique())
    if policy is None:
        if len(present) != 1:
            raise InputError('%s holds policies %s, choose one' % (path, present))
        return present[0]
    if policy not in present:
        raise InputError('%s has no %s runs' % (path, policy))
    return policy


def bootstrap_mean_ci(values, n_boot=BOOTSTRAP_RESAMPLES, seed=0, level=0.95):
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return math.nan, (math.nan, math.nan)
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, values.size, size=(n_boot, values.size))
    means = values[idx].mean(axis=1)
    tail = 100.0 * (1.0 - level) / 2.0
    lo, hi = np.percentile(means, [tail, 100.0 - tail])
    return float(values.mean()), (float(lo), float(hi))


def compare_dirs(dir_a, dir_b, n_boot=BOOTSTRAP_RESAMPLES, seed=0, policy_a=None, policy_b=None):
    '''
    Paired comparison of two result directories on their common (window, repeat) runs
    :return: dict with the mean relative cost difference (B - A) / A, its
             percentile bootstrap interval and both fulfilment rates
    '''
    runs_a, runs_b = _load_runs(dir_a), _load_runs(dir_b)
    pa = _pick_policy(runs_a, policy_a, dir_a)
    pb = _pick_policy(runs_b, policy_b, dir_b)
    a = runs_a[runs_a['policy'] == pa]
    b = runs_b[runs_b['policy'] == pb]
    pairs = a.merge(b, on=['window', 'repeat'], suffixes=('_a', '_b'))
    if pairs.empty:
        raise InputError('%s and %s share no (window, repeat) runs' % (dir_a, dir_b))
    cost_a = pairs['total_cost_a'].to_numpy()
    cost_b = pairs['total_cost_b'].to_numpy()
    rel = np.where(cost_a > 0, (cost_b - cost_a) / np.where(cost_a > 0, cost_a, 1.0), 0.0)
    mean, (lo, hi) = bootstrap_mean_ci(rel, n_boot, seed)
    return {
        'a': {'dir': str(dir_a), 'policy': pa, 'J_avg': float(cost_a.mean()),
              'fulfilment_rate': float(pairs['all_fulfilled_a'].mean())},
        'b': {'dir': str(dir_b), 'policy': pb, 'J_avg': float(cost_b.mean()),
              'fulfilment_rate': float(pairs['all_fulfilled_b'].mean())},
        'pairs': int(len(pairs)),
        'relative_difference': mean,
        'ci': [lo, hi],
        'bootstrap_resamples': int(n_boot),
        'a_cheaper_share': float(np.mean(cost_a < cost_b)),
    }
