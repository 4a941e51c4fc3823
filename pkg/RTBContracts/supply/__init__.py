# Copyright (c) 2026 RTBContracts contributors. All rights reserved.

from .SupplySlice import SupplySlice
from .SupplyCurve import (TimeVaryingSupplyCurve, eval_W, invert_W, expected_cost, acquisition_cost,
                          aggregate, supply_bound, combine_curves)
from .smoothing import RawWinCurve, smooth_curve
from .curve_io import save_curve, load_curve, curve_to_dict, curve_from_dict
