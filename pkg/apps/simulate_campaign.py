# Copyright (c) 2026 RTBContracts contributors. All rights reserved.

import argparse

from RTBContracts.experiment import ControlOptions, ExperimentContext, WindowSpec, run_experiment
from RTBContracts.log_util import setup_logging
from RTBContracts.scenario import SyntheticMarketSpec, campaign_scenario
from RTBContracts.simulator import synthetic_sampler


###############################################################################################
##                   Setting
###############################################################################################
parser = argparse.ArgumentParser()
parser.add_argument('-o', '--out_path', type=str, default='./results/campaign')
parser.add_argument('-w', '--windows', type=int, default=9)
parser.add_argument('-r', '--repeats', type=int, default=4)
parser.add_argument('-j', '--workers', type=int, default=1)
parser.add_argument('--seed', type=int, default=0)
parser.add_argument('--replan_hours', type=float, default=1.0)
args = parser.parse_args()
###############################################################################################
##                   Dynamic against static
###############################################################################################

setup_logging(default='INFO')
scenario = campaign_scenario(SyntheticMarketSpec())
ctx = ExperimentContext(scenario.contracts, scenario.decomposition, scenario.planning_curves,
                        synthetic_sampler(scenario.market_curves),
                        control=ControlOptions(replan_hours=args.replan_hours))
result = run_experiment(ctx, WindowSpec(count=args.windows, repeats=args.repeats), args.seed,
                        workers=args.workers, out_dir=args.out_path)
for policy, stats in result.aggregate.items():
    print(policy, stats)
