# Copyright (c) 2026 RTBContracts contributors. All rights reserved.

from .MarketSampler import MarketSampler, EmpiricalSampler, SyntheticSampler, synthetic_sampler, sample_event
from .bidder import PlanBidder
from .simulation import AuctionEvent, SimulationResult, run, normalize, summary, write_result
