# Copyright (c) 2026 RTBContracts contributors. All rights reserved.

from .PlanningInstance import (CompoundType, PlanningInstance, build_instance, check_adequate_supply,
                               static_instance)
from .plans import (PseudoBids, FlowPlan, BidPlan, SolverReport, PlanResult, plan_to_dict, plan_from_dict,
                    save_plan, load_plan, format_summary)
from .dual import solve_dual, dual_value, supergradient, duality_gap, capacity_check
from .recovery import route_flow, recover_primal, plan_from_flow, plan_cost
from .oracles import brute_force_solve, single_contract_bid
from .solver import SolverOptions, Planner, penalty_solve, static_plan
