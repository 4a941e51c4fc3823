from RTBContracts.planner import Planner, build_instance, format_summary
from RTBContracts.scenario import campaign_scenario
from RTBContracts.simulator import synthetic_sampler
from RTBContracts.experiment import ExperimentContext, run_experiment

from RTBContracts.options import BaseOptions

cmd = ['simulate',
       '--config', './configs/campaign_quick.json',
       '--both',
       '--seed', '3']

options_parser = BaseOptions()
opts, cfg = options_parser.parse(cmd)

scenario = campaign_scenario(requirement_scale=cfg.requirement_scale)
instance = build_instance(scenario.contracts, scenario.decomposition, scenario.planning_curves)
print(format_summary(Planner(cfg.solver).solve(instance)))

ctx = ExperimentContext(scenario.contracts, scenario.decomposition, scenario.planning_curves,
                        synthetic_sampler(scenario.market_curves), solver=cfg.solver, control=cfg.control)
result = run_experiment(ctx, cfg.windows, cfg.seed, cfg.policies)
print(result.aggregate)
