# Copyright (c) 2026 RTBContracts contributors. All rights reserved.

import json
import logging
import math
import os
import re
import sys

from RTBContracts.errors import ConfigurationError, InputError, RTBError
from RTBContracts.estimation import empirical_sampler_from_log, estimate_log, read_log, split_log
from RTBContracts.experiment import ExperimentContext, compare_dirs, run_experiment
from RTBContracts.grid import create_bid_grid
from RTBContracts.log_util import setup_logging
from RTBContracts.options import BaseOptions, RunConfig, config_hash, config_to_dict
from RTBContracts.planner import Planner, build_instance, format_summary, save_plan
from RTBContracts.scenario import SyntheticMarketSpec, campaign_contracts, campaign_scenario, type_curves
from RTBContracts.simulator import synthetic_sampler
from RTBContracts.supply import load_curve, save_curve
from RTBContracts.targeting import decompose, load_contracts

logger = logging.getLogger('RTBContracts')


###############################################################################################
#                   Setting
###############################################################################################

def _log_grid(records, x_max, resolution):
    if x_max is None:
        x_max = 1.2 * float(records['market_price'].max())
    return create_bid_grid(max(x_max, 1.0), 0.0, resolution, x_min=0.0)


def build_context(cfg: RunConfig):
    '''
    Contracts, planning curves and market sampler described by a run configuration
    :return: ExperimentContext
    '''
    contracts = load_contracts(cfg.contracts) if cfg.contracts else campaign_contracts(cfg.requirement_scale)
    source = cfg.curves
    origin = 0.0
    if source.kind == 'synthetic':
        try:
            spec = SyntheticMarketSpec(sigma=cfg.control.sigma, resolution=source.resolution, **source.synthetic)
        except TypeError as e:
            raise ConfigurationError('invalid synthetic market options: %s' % e)
        scenario = campaign_scenario(spec, contracts=contracts)
        decomposition = scenario.decomposition
        curves = scenario.planning_curves
        sampler = synthetic_sampler(scenario.market_curves)
    elif source.kind == 'curves':
        decomposition = decompose(contracts)
        by_atom = {atom: load_curve(path) for atom, path in source.files.items()}
        curves = type_curves(decomposition, by_atom)
        sampler = synthetic_sampler(curves)
    else:
        decomposition = decompose(contracts)
        records = read_log(source.log)
        train, test = split_log(records, source.train_fraction)
        if test.empty:
            test = train
        grid = _log_grid(train, source.x_max, source.resolution)
        curves, _ = estimate_log(train, decomposition.types, grid, cfg.control.sigma, source.outlier_quantile,
                                 source.outlier_min_ratio)
        sampler = empirical_sampler_from_log(test, decomposition.types)
        origin = float(math.floor(test['time'].min()))
        span = float(test['time'].max()) - origin
        if cfg.windows.span > span:
            raise ConfigurationError('windows need %g h of log but only %.1f h are available'
                                     % (cfg.windows.span, span))
    return ExperimentContext(contracts, decomposition, curves, sampler, origin, cfg.solver, cfg.control)


###############################################################################################
#                   Commands
###############################################################################################

def _curve_filename(name):
    return re.sub(r'[^A-Za-z0-9_.-]+', '_', str(name)) + '.json'


def cmd_estimate(opt):
    records = read_log(opt.log)
    train, _ = split_log(records, opt.train_fraction)
    if opt.contracts:
        type_atoms = list(decompose(load_contracts(opt.contracts)).types)
    else:
        type_atoms = [frozenset([tag]) for tag in sorted(train['user_tag'].unique())]
    grid = _log_grid(train, opt.x_max, opt.resolution)
    curves, reports = estimate_log(train, type_atoms, grid, opt.sigma, opt.outlier_quantile, opt.outlier_min_ratio)
    os.makedirs(opt.out, exist_ok=True)
    for curve in curves:
        path = os.path.join(opt.out, _curve_filename(curve.name))
        save_curve(curve, path)
        print('wrote %s' % path)
    with open(os.path.join(opt.out, 'estimate_report.json'), 'w') as f:
        json.dump(reports, f, indent=2)
    return 0


def cmd_plan(opt, cfg: RunConfig):
    ctx = build_context(cfg)
    curves = [c.shifted(ctx.origin) for c in ctx.planning_curves] if ctx.origin else ctx.planning_curves
    instance = build_instance(ctx.contracts, ctx.decomposition, curves)
    planner = Planner(cfg.solver)
    result = planner.static(instance) if opt.static else planner.solve(instance)
    print(format_summary(result))
    path = os.path.join(cfg.out, 'plan.json')
    save_plan(result, path)
    print('wrote %s' % path)
    return 0


def cmd_simulate(opt, cfg: RunConfig):
    ctx = build_context(cfg)
    digest = config_hash(cfg)
    os.makedirs(cfg.out, exist_ok=True)
    with open(os.path.join(cfg.out, 'config.json'), 'w') as f:
        json.dump(config_to_dict(cfg), f, indent=2)
    result = run_experiment(ctx, cfg.windows, cfg.seed, cfg.policies, cfg.workers, out_dir=cfg.out,
                            metadata={'config_hash': digest, 'base_seed': cfg.seed})
    for policy, stats in result.aggregate.items():
        print('%-8s J_avg %.6g  median %.6g  fulfilment %.1f%%  (%d runs)' % (
            policy, stats['J_avg'], stats['median_cost'], 100.0 * stats['fulfilment_rate'], stats['runs']))
    print('results in %s' % cfg.out)
    return 0


def cmd_compare(opt):
    report = compare_dirs(opt.dir_a, opt.dir_b, opt.bootstrap, opt.seed, opt.policy_a, opt.policy_b)
    print('%d paired runs' % report['pairs'])
    for side in ('a', 'b'):
        r = report[side]
        print('%s: %s [%s] J_avg %.6g fulfilment %.1f%%' % (side.upper(), r['dir'], r['policy'], r['J_avg'],
                                                           100.0 * r['fulfilment_rate']))
    print('relative cost difference (B - A) / A: %+.2f%%  95%% CI [%+.2f%%, %+.2f%%]' % (
        100.0 * report['relative_difference'], 100.0 * report['ci'][0], 100.0 * report['ci'][1]))
    print(json.dumps(report))
    return 0


def main(args=None):
    setup_logging(default='INFO')
    options_parser = BaseOptions()
    try:
        opt, cfg = options_parser.parse(args)
    except SystemExit as e:
        # argparse usage errors share the input error code
        return 0 if not e.code else InputError.exit_code
    except RTBError as e:
        logger.error('%s', e)
        return e.exit_code
    try:
        if opt.command == 'estimate':
            return cmd_estimate(opt)
        if opt.command == 'plan':
            return cmd_plan(opt, cfg)
        if opt.command == 'simulate':
            return cmd_simulate(opt, cfg)
        return cmd_compare(opt)
    except RTBError as e:
        logger.error('%s', e)
        return e.exit_code


if __name__ == '__main__':
    sys.exit(main())
