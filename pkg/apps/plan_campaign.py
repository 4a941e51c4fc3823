# Copyright (c) 2026 RTBContracts contributors. All rights reserved.

import argparse

from RTBContracts.log_util import setup_logging
from RTBContracts.planner import Planner, build_instance, format_summary, save_plan
from RTBContracts.scenario import SyntheticMarketSpec, campaign_scenario


###############################################################################################
##                   Setting
###############################################################################################
parser = argparse.ArgumentParser()
parser.add_argument('-o', '--out_path', type=str, default='./results/campaign_plan.json')
parser.add_argument('-s', '--sigma', type=float, default=2.0)
parser.add_argument('--scale', type=float, default=0.1, help='requirement scale')
parser.add_argument('--static', action='store_true', help='horizon averaged baseline')
args = parser.parse_args()
###############################################################################################
##                   Plan
###############################################################################################

setup_logging(default='INFO')
scenario = campaign_scenario(SyntheticMarketSpec(sigma=args.sigma), requirement_scale=args.scale)
instance = build_instance(scenario.contracts, scenario.decomposition, scenario.planning_curves)
planner = Planner()
result = planner.static(instance) if args.static else planner.solve(instance)
print(format_summary(result))
save_plan(result, args.out_path)
