# Copyright (c) 2026 RTBContracts contributors. All rights reserved.

import argparse
import dataclasses
import hashlib
import json
import logging
import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional

from RTBContracts.errors import ConfigurationError, ParameterError
from RTBContracts.experiment import POLICIES, BOOTSTRAP_RESAMPLES, ControlOptions, WindowSpec
from RTBContracts.grid import DEFAULT_RESOLUTION
from RTBContracts.planner import SolverOptions

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
CURVE_KINDS = ('synthetic', 'curves', 'log')


@dataclass
class CurveSource:
    '''
    kind: 'synthetic' (sinusoidal market, options in ``synthetic``),
          'curves' (one supply curve JSON per targeting atom in ``files``) or
          'log' (auction log CSV in ``log``, estimated per item type)
    '''
    kind: str = 'synthetic'
    synthetic: Dict = field(default_factory=dict)
    files: Dict[str, str] = field(default_factory=dict)
    log: Optional[str] = None
    train_fraction: float = 1.0
    x_max: Optional[float] = None
    resolution: int = DEFAULT_RESOLUTION
    outlier_quantile: float = 0.99
    outlier_min_ratio: float = 10.0

    def __post_init__(self):
        if self.kind not in CURVE_KINDS:
            raise ConfigurationError('curve source kind must be one of %s' % (CURVE_KINDS,))
        if self.kind == 'curves' and not self.files:
            raise ConfigurationError('curve source "curves" needs files {atom: path}')
        if self.kind == 'log' and not self.log:
            raise ConfigurationError('curve source "log" needs a log path')


@dataclass
class RunConfig:
    schema_version: int = SCHEMA_VERSION
    contracts: Optional[str] = None
    requirement_scale: float = 0.1
    curves: CurveSource = field(default_factory=CurveSource)
    solver: SolverOptions = field(default_factory=SolverOptions)
    control: ControlOptions = field(default_factory=ControlOptions)
    windows: WindowSpec = field(default_factory=WindowSpec)
    policies: List[str] = field(default_factory=lambda: list(POLICIES))
    seed: int = 0
    workers: int = 1
    out: str = './results'

    def __post_init__(self):
        if self.schema_version != SCHEMA_VERSION:
            raise ConfigurationError('unsupported config schema version %r (expected %d)'
                                     % (self.schema_version, SCHEMA_VERSION))
        bad = [p for p in self.policies if p not in POLICIES]
        if bad or not self.policies:
            raise ConfigurationError('policies must be a non-empty subset of %s' % (POLICIES,))
        if self.workers < 1:
            raise ConfigurationError('workers must be >= 1')
        if self.requirement_scale <= 0:
            raise ConfigurationError('requirement scale must be positive')


def _build(cls, doc, where):
    if not isinstance(doc, dict):
        raise ConfigurationError('%s must be an object' % where)
    names = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(doc) - set(names))
    if unknown:
        raise ConfigurationError('unknown keys in %s: %s' % (where, unknown))
    kwargs = {}
    for key, value in doc.items():
        sub = _NESTED.get((cls, key))
        kwargs[key] = _build(sub, value, '%s.%s' % (where, key)) if sub else value
    try:
        return cls(**kwargs)
    except (TypeError, ParameterError) as e:
        raise ConfigurationError('invalid %s: %s' % (where, e))


_NESTED = {
    (RunConfig, 'curves'): CurveSource,
    (RunConfig, 'solver'): SolverOptions,
    (RunConfig, 'control'): ControlOptions,
    (RunConfig, 'windows'): WindowSpec,
}


def _resolve(path, base):
    if path is None or os.path.isabs(path):
        return path
    return os.path.normpath(os.path.join(base, path))


def config_from_dict(doc, base_dir='.'):
    cfg = _build(RunConfig, doc, 'config')
    cfg.contracts = _resolve(cfg.contracts, base_dir)
    cfg.curves.log = _resolve(cfg.curves.log, base_dir)
    cfg.curves.files = {atom: _resolve(p, base_dir) for atom, p in cfg.curves.files.items()}
    cfg.out = _resolve(cfg.out, base_dir)
    return cfg


def load_config(path):
    '''
    Read a JSON run configuration; relative paths resolve against its directory
    '''
    try:
        with open(path) as f:
            doc = json.load(f)
    except OSError as e:
        raise ConfigurationError('cannot read config %s: %s' % (path, e))
    except json.JSONDecodeError as e:
        raise ConfigurationError('config %s is not valid JSON: %s' % (path, e))
    return config_from_dict(doc, os.path.dirname(os.path.abspath(path)))


def config_to_dict(cfg: RunConfig):
    return dataclasses.asdict(cfg)


def config_hash(cfg: RunConfig):
    canonical = json.dumps(config_to_dict(cfg), sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(canonical.encode('utf-8')).hexdigest()


class BaseOptions():
    def __init__(self):
        self.initialized = False
        self.parser = None

    def initialize(self, parser):
        commands = parser.add_subparsers(dest='command', metavar='command')
        commands.required = True

        # estimate
        p_est = commands.add_parser('estimate', help='estimate supply curves from an auction log',
                                    formatter_class=argparse.ArgumentDefaultsHelpFormatter)
        g_in = p_est.add_argument_group('Input')
        g_in.add_argument('--log', type=str, required=True, help='auction log CSV (timestamp,user_tag,market_price)')
        g_in.add_argument('--contracts', type=str, default=None,
                          help='contract file; pools tags into item types instead of one curve per tag')
        g_in.add_argument('--train-fraction', type=float, default=1.0,
                          help='estimate from this leading fraction of the log span')
        g_est = p_est.add_argument_group('Estimation')
        g_est.add_argument('--sigma', type=float, default=2.0, help='bid randomization the curves are smoothed with')
        g_est.add_argument('--x-max', type=float, default=None, help='bid cap, default 1.2 x the largest price')
        g_est.add_argument('--resolution', type=int, default=DEFAULT_RESOLUTION, help='# of bid grid points')
        g_est.add_argument('--outlier-quantile', type=float, default=0.99, help='interarrival outlier quantile')
        g_est.add_argument('--outlier-min-ratio', type=float, default=10.0,
                           help='outliers must also exceed this multiple of the bucket median')
        g_out = p_est.add_argument_group('Output')
        g_out.add_argument('--out', type=str, required=True, help='directory for the curve JSON files')

        # plan
        p_plan = commands.add_parser('plan', help='compute a bid plan',
                                     formatter_class=argparse.ArgumentDefaultsHelpFormatter)
        p_plan.add_argument('--config', type=str, default=None, help='run configuration JSON')
        g_plan = p_plan.add_argument_group('Planning')
        g_plan.add_argument('--static', action='store_true', help='plan against horizon averaged curves')
        g_plan.add_argument('--strict', action='store_true', help='fail on infeasible instances (exit code 2)')
        g_plan.add_argument('--method', type=str, default=None, choices=['levels', 'supergradient'],
                            help='dual solver')
        g_plan.add_argument('--sigma', type=float, default=None, help='bid randomization')
        p_plan.add_argument_group('Output').add_argument('--out', type=str, default=None,
                                                         help='directory for plan.json')

        # simulate
        p_sim = commands.add_parser('simulate', help='simulate receding horizon bidding over sliding windows',
                                    formatter_class=argparse.ArgumentDefaultsHelpFormatter)
        p_sim.add_argument('--config', type=str, default=None, help='run configuration JSON')
        g_pol = p_sim.add_argument_group('Policy').add_mutually_exclusive_group()
        g_pol.add_argument('--dynamic', dest='policies', action='store_const', const=['dynamic'],
                           help='only the time varying plan')
        g_pol.add_argument('--static', dest='policies', action='store_const', const=['static'],
                           help='only the horizon averaged plan')
        g_pol.add_argument('--both', dest='policies', action='store_const', const=list(POLICIES),
                           help='both policies on identical market streams')
        g_ctl = p_sim.add_argument_group('Control')
        g_ctl.add_argument('--replan-hours', type=float, default=None, help='replan interval in hours')
        g_ctl.add_argument('--sigma', type=float, default=None, help='bid randomization')
        g_ctl.add_argument('--strict', action='store_true', help='fail on infeasible replans')
        g_run = p_sim.add_argument_group('Simulation')
        g_run.add_argument('--seed', type=int, default=None, help='base seed of all runs')
        g_run.add_argument('--workers', type=int, default=None, help='# of worker processes')
        p_sim.add_argument_group('Output').add_argument('--out', type=str, default=None, help='results directory')

        # compare
        p_cmp = commands.add_parser('compare', help='paired cost comparison of two results directories',
                                    formatter_class=argparse.ArgumentDefaultsHelpFormatter)
        p_cmp.add_argument('dir_a', type=str, help='baseline results directory')
        p_cmp.add_argument('dir_b', type=str, help='results directory compared against the baseline')
        p_cmp.add_argument('--policy-a', type=str, default=None, help='policy to read from dir_a')
        p_cmp.add_argument('--policy-b', type=str, default=None, help='policy to read from dir_b')
        p_cmp.add_argument('--bootstrap', type=int, default=BOOTSTRAP_RESAMPLES, help='# of bootstrap resamples')
        p_cmp.add_argument('--seed', type=int, default=0, help='bootstrap seed')

        self.initialized = True
        return parser

    def gather_options(self, args=None):
        # initialize parser with basic options
        if not self.initialized:
            parser = argparse.ArgumentParser(
                prog='rtbcontracts', formatter_class=argparse.ArgumentDefaultsHelpFormatter)
            parser = self.initialize(parser)
            self.parser = parser

        if args is None:
            return self.parser.parse_args()
        else:
            return self.parser.parse_args(args)

    def print_options(self, opt):
        message = ''
        message += '----------------- Options ---------------\n'
        for k, v in sorted(vars(opt).items()):
            message += '{:>25}: {:<30}\n'.format(str(k), str(v))
        message += '----------------- End -------------------'
        logger.info('\n%s', message)

    def parse(self, args=None):
        '''
        :return: (parsed options, RunConfig with command line overrides or None for estimate/compare)
        '''
        opt = self.gather_options(args)
        self.print_options(opt)
        if opt.command in ('estimate', 'compare'):
            return opt, None

        cfg = load_config(opt.config) if opt.config else RunConfig()
        solver = cfg.solver
        if getattr(opt, 'strict', False):
            solver = dataclasses.replace(solver, strict=True)
        if getattr(opt, 'method', None):
            solver = dataclasses.replace(solver, method=opt.method)
        control = cfg.control
        if getattr(opt, 'replan_hours', None) is not None:
            control = dataclasses.replace(control, replan_hours=opt.replan_hours)
        if opt.sigma is not None:
            control = dataclasses.replace(control, sigma=opt.sigma)
        cfg = dataclasses.replace(cfg, solver=solver, control=control)
        if getattr(opt, 'policies', None):
            cfg = dataclasses.replace(cfg, policies=list(opt.policies))
        if getattr(opt, 'seed', None) is not None:
            cfg = dataclasses.replace(cfg, seed=opt.seed)
        if getattr(opt, 'workers', None) is not None:
            cfg = dataclasses.replace(cfg, workers=opt.workers)
        if opt.out is not None:
            cfg = dataclasses.replace(cfg, out=opt.out)
        return opt, cfg
