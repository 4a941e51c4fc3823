# Copyright (c) 2026 RTBContracts contributors. All rights reserved.

import json
import os

import numpy as np

from RTBContracts.errors import InputError
from RTBContracts.supply.SupplyCurve import TimeVaryingSupplyCurve

CURVE_FORMAT = 'rtbcontracts.supply_curve'
CURVE_VERSION = 1
UNITS = {
    'grid_x': 'currency per item (bid)',
    'grid_t': 'hours',
    'win_prob': 'probability',
    'lambda': 'items per hour',
    'sigma': 'currency',
    'period_hours': 'hours',
    'market': 'price grid (currency) and market price CDF at the same time knots',
}


def curve_to_dict(curve: TimeVaryingSupplyCurve):
    doc = {
        'header': {'format': CURVE_FORMAT, 'version': CURVE_VERSION, 'units': UNITS, 'name': curve.name},
        'grid_x': curve.grid_x.tolist(),
        'grid_t': curve.grid_t.tolist(),
        'win_prob': curve.win_prob.tolist(),
        'lambda': curve.lam.tolist(),
        'sigma': curve.sigma,
        'period_hours': curve.period_hours,
    }
    if curve.market is not None:
        doc['market'] = {'grid_x': curve.market.grid_x.tolist(), 'win_prob': curve.market.win_prob.tolist()}
    return doc


def curve_from_dict(doc):
    try:
        header = doc.get('header', {})
        if header.get('format', CURVE_FORMAT) != CURVE_FORMAT:
            raise InputError('not a supply curve document: %r' % header.get('format'))
        grid_t = np.asarray(doc['grid_t'], dtype=float)
        lam = np.asarray(doc['lambda'], dtype=float)
        period_hours = doc.get('period_hours')
        market = None
        if doc.get('market') is not None:
            market = TimeVaryingSupplyCurve(np.asarray(doc['market']['grid_x'], dtype=float), grid_t,
                                            np.asarray(doc['market']['win_prob'], dtype=float), lam,
                                            period_hours=period_hours, name=header.get('name'))
        return TimeVaryingSupplyCurve(
            np.asarray(doc['grid_x'], dtype=float),
            grid_t,
            np.asarray(doc['win_prob'], dtype=float),
            lam,
            sigma=float(doc.get('sigma', 0.0)),
            period_hours=period_hours,
            name=header.get('name'),
            market=market,
        )
    except (KeyError, TypeError) as e:
        raise InputError('malformed supply curve document: %s' % e)


def save_curve(curve, path):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, 'w') as f:
        json.dump(curve_to_dict(curve), f)


def load_curve(path):
    try:
        with open(path) as f:
            doc = json.load(f)
    except (OSError, ValueError) as e:
        raise InputError('cannot read supply curve %s: %s' % (path, e))
    return curve_from_dict(doc)
