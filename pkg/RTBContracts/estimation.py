# Copyright (c) 2026 RTBContracts contributors. All rights reserved.

"""
Supply curves from auction logs: hourly arrival rates from interarrival
times, hourly market price distributions by kernel density estimation, and
a 24 h periodic surface interpolating both.
"""
import logging

import numpy as np
import pandas as pd
from scipy.stats import norm
from tqdm import tqdm

from RTBContracts.errors import ConfigurationError, InputError, ParameterError
from RTBContracts.log_util import progress_disabled
from RTBContracts.simulator.MarketSampler import HOURS_PER_DAY, EmpiricalSampler
from RTBContracts.supply.SupplyCurve import TimeVaryingSupplyCurve
from RTBContracts.supply.smoothing import RawWinCurve, smooth_curve

logger = logging.getLogger(__name__)

LOG_COLUMNS = ('timestamp', 'user_tag', 'market_price')
MAX_MALFORMED = 0.01
OUTLIER_QUANTILE = 0.99
OUTLIER_MIN_RATIO = 10.0
MIN_PRICE_SAMPLES = 30
SIGMA_FLOOR = 1.0
FLOOR_SLOPE = 1e-12
KDE_CHUNK = 4096


def _parse_timestamps(raw):
    '''
    :param raw: Series of strings, epoch seconds, ISO-8601 or yyyyMMddHHmmssSSS
    :return: Series of hours since the epoch, NaN where unparseable
    '''
    hours = pd.Series(np.nan, index=raw.index)
    compact = raw.str.fullmatch(r'\d{17}')
    if compact.any():
        stamps = pd.to_datetime(raw[compact], format='%Y%m%d%H%M%S%f', errors='coerce', utc=True)
        hours[compact] = (stamps - pd.Timestamp(0, tz='UTC')).dt.total_seconds() / 3600.0
    rest = ~compact
    numeric = pd.to_numeric(raw[rest], errors='coerce')
    hours[numeric.dropna().index] = numeric.dropna() / 3600.0
    iso = rest & hours.isna()
    if iso.any():
        stamps = pd.to_datetime(raw[iso], errors='coerce', utc=True)
        hours[iso] = (stamps - pd.Timestamp(0, tz='UTC')).dt.total_seconds() / 3600.0
    return hours


def read_log(path, max_malformed=MAX_MALFORMED):
    '''
    Read an auction log CSV with columns timestamp, user_tag, market_price
    :param max_malformed: fraction of malformed rows above which reading fails
    :return: DataFrame [time (hours since epoch), user_tag, market_price, line]
             sorted by time, one row per tag of multi-tag rows
    '''
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except (OSError, pd.errors.EmptyDataError, pd.errors.ParserError) as e:
        raise InputError('cannot read auction log %s: %s' % (path, e))
    missing = [c for c in LOG_COLUMNS if c not in frame.columns]
    if missing:
        raise InputError('auction log %s lacks columns %s' % (path, missing))
    if frame.empty:
        raise InputError('auction log %s has no rows' % path)

    frame = frame[list(LOG_COLUMNS)].copy()
    frame['line'] = frame.index + 2
    frame['time'] = _parse_timestamps(frame['timestamp'].str.strip())
    frame['market_price'] = pd.to_numeric(frame['market_price'], errors='coerce')
    frame['user_tag'] = frame['user_tag'].str.strip()

    bad = frame['time'].isna() | frame['market_price'].isna() | (frame['market_price'] < 0) | \
        (frame['user_tag'] == '')
    n_bad = int(bad.sum())
    if n_bad:
        lines = frame.loc[bad, 'line'].tolist()
        shown = ', '.join(str(n) for n in lines[:10]) + (' ...' if n_bad > 10 else '')
        if n_bad > max_malformed * len(frame):
            raise InputError('%d of %d rows of %s are malformed (lines %s)' % (n_bad, len(frame), path, shown))
        logger.warning('skipping %d malformed rows of %s (lines %s)', n_bad, path, shown)

    frame = frame.loc[~bad, ['time', 'user_tag', 'market_price', 'line']]
    frame['user_tag'] = frame['user_tag'].str.split(',')
    frame = frame.explode('user_tag')
    frame['user_tag'] = frame['user_tag'].str.strip()
    frame = frame[frame['user_tag'] != '']
    return frame.sort_values(['time', 'line'], kind='stable').reset_index(drop=True)


def split_log(records, train_fraction):
    '''
    Split at the time quantile train_fraction of the log's span
    :return: (train, test) DataFrames
    '''
    if not 0.0 < train_fraction <= 1.0:
        raise ParameterError('train fraction must lie in (0, 1]')
    if train_fraction == 1.0:
        return records, records.iloc[0:0]
    t0, t1 = records['time'].min(), records['time'].max()
    cut = t0 + train_fraction * (t1 - t0)
    return records[records['time'] < cut], records[records['time'] >= cut]


def _impute_circular(values, valid):
    '''
    Fill invalid hours by linear interpolation between the nearest valid hours around the clock
    '''
    hours = np.arange(len(values))
    known = hours[valid]
    if known.size == 0:
        raise ConfigurationError('no hour bucket has enough data')
    if known.size == len(values):
        return values
    xp = np.concatenate([known - len(values), known, known + len(values)])
    fp = np.tile(values[valid], 3)
    return np.interp(hours, xp, fp)


def interarrival_buckets(times):
    '''
    Interarrival times grouped by the hour of day of the arrival that starts them
    :param times: arrival times in hours
    :return: list of 24 arrays
    '''
    times = np.sort(np.asarray(times, dtype=float))
    gaps = np.diff(times)
    hours = np.floor(times[:-1]).astype(np.int64) % HOURS_PER_DAY
    return [gaps[hours == h] for h in range(HOURS_PER_DAY)]


def drop_outliers(gaps, quantile=OUTLIER_QUANTILE, min_ratio=OUTLIER_MIN_RATIO):
    """Drop gaps above the quantile that are also min_ratio times the bucket median."""
    if gaps.size < 2:
        return gaps
    cut = max(np.quantile(gaps, quantile), min_ratio * np.median(gaps))
    return gaps[gaps <= cut]


def estimate_arrival_rates(times, quantile=OUTLIER_QUANTILE, min_ratio=OUTLIER_MIN_RATIO):
    '''
    Hourly arrival rates, the inverse mean interarrival time per hour of day
    :param times: arrival times of one type in hours
    :return: (rates [24] items/hour, report dict listing imputed hours and dropped gaps)
    '''
    buckets = interarrival_buckets(times)
    rates = np.zeros(HOURS_PER_DAY)
    valid = np.zeros(HOURS_PER_DAY, dtype=bool)
    dropped = 0
    for h, gaps in enumerate(buckets):
        kept = drop_outliers(gaps, quantile, min_ratio)
        dropped += gaps.size - kept.size
        if kept.size == 0 or kept.mean() <= 0:
            continue
        rates[h] = 1.0 / kept.mean()
        valid[h] = True
    imputed = [int(h) for h in np.nonzero(~valid)[0]]
    if imputed:
        logger.warning('hours %s have no usable interarrivals, rates imputed from neighbouring hours', imputed)
    rates = _impute_circular(rates, valid)
    return rates, {'imputed_hours': imputed, 'dropped_gaps': int(dropped)}


def kde_cdf(prices, grid_x, sigma_floor=SIGMA_FLOOR):
    '''
    CDF of a Gaussian KDE of non-negative prices, reflected at 0, with the
    normal reference bandwidth 1.06 sigma n^(-1/5)
    :return: [nx] CDF on grid_x; degenerate samples use bandwidth sigma_floor
    '''
    prices = np.asarray(prices, dtype=float)
    n = prices.size
    if n == 0:
        raise ConfigurationError('no prices to estimate from')
    spread = prices.std(ddof=1) if n > 1 else 0.0
    bw = 1.06 * spread * n ** (-0.2) if spread > 0 else sigma_floor
    x = np.maximum(np.asarray(grid_x, dtype=float), 0.0)
    total = np.zeros_like(x)
    for start in range(0, n, KDE_CHUNK):
        p = prices[start:start + KDE_CHUNK, None]
        total += (norm.cdf((x[None, :] - p) / bw) - norm.cdf((-x[None, :] - p) / bw)).sum(axis=0)
    cdf = np.where(np.asarray(grid_x) < 0, 0.0, total / n)
    return np.maximum.accumulate(np.clip(cdf, 0.0, 1.0))


def _merged_bucket(buckets, h, min_samples):
    pooled = [buckets[h]]
    size = buckets[h].size
    reach = 0
    while size < min_samples and reach < HOURS_PER_DAY // 2:
        reach += 1
        for g in sorted({(h - reach) % HOURS_PER_DAY, (h + reach) % HOURS_PER_DAY}):
            pooled.append(buckets[g])
            size += buckets[g].size
    return np.concatenate(pooled), reach


def estimate_win_prob(times, prices, grid_x, min_samples=MIN_PRICE_SAMPLES, sigma_floor=SIGMA_FLOOR):
    '''
    Hourly market price CDFs, i.e. steady state win probabilities
    :param times: auction times in hours
    :param prices: market prices of those auctions
    :return: (cdf [24, nx], report with the hours merged with neighbours)
    '''
    times = np.asarray(times, dtype=float)
    prices = np.asarray(prices, dtype=float)
    hours = np.floor(times).astype(np.int64) % HOURS_PER_DAY
    buckets = [prices[hours == h] for h in range(HOURS_PER_DAY)]
    if prices.size == 0:
        raise ConfigurationError('no prices to estimate from')
    rows = np.zeros((HOURS_PER_DAY, len(grid_x)))
    merged = {}
    for h in range(HOURS_PER_DAY):
        sample, reach = _merged_bucket(buckets, h, min_samples)
        if reach:
            merged[h] = reach
        rows[h] = kde_cdf(sample, grid_x, sigma_floor)
    if merged:
        logger.warning('hours %s had fewer than %d prices and were merged with neighbours', sorted(merged),
                       min_samples)
    return rows, {'merged_hours': merged}


def build_periodic_curve(rates, cdf_rows, grid_x, sigma, name=None, floor_slope=FLOOR_SLOPE):
    '''
    24 h periodic supply curve with knots on the hours
    :param rates: [24] arrival rates
    :param cdf_rows: [24, nx] win probabilities on grid_x (uniform, starting at 0)
    :param sigma: bid randomization; every hour's win curve is smoothed with it
    '''
    rates = np.asarray(rates, dtype=float)
    cdf_rows = np.asarray(cdf_rows, dtype=float)
    if rates.shape != (HOURS_PER_DAY,) or cdf_rows.shape != (HOURS_PER_DAY, len(grid_x)):
        raise ParameterError('need 24 hourly rates and CDF rows')
    slices = [smooth_curve(RawWinCurve(grid_x, np.maximum.accumulate(row), bound=1.0), sigma, floor_slope)
              for row in cdf_rows]
    win_prob = np.stack([np.minimum(s.values, 1.0) for s in slices])
    hours = np.arange(HOURS_PER_DAY, dtype=float)
    market_cdf = np.maximum.accumulate(np.clip(cdf_rows, 0.0, 1.0), axis=1)
    market = TimeVaryingSupplyCurve(grid_x, hours, market_cdf, rates, period_hours=float(HOURS_PER_DAY), name=name)
    return TimeVaryingSupplyCurve(slices[0].grid_x, hours, win_prob, rates, sigma=sigma,
                                  period_hours=float(HOURS_PER_DAY), name=name, market=market)


def type_of_tags(records, type_atoms):
    '''
    Item type of every record
    :param type_atoms: list of atom sets, one per type (Decomposition.types)
    :return: Series of type indices, -1 for untargeted tags
    '''
    lookup = {atom: j for j, atoms in enumerate(type_atoms) for atom in atoms}
    return records['user_tag'].map(lambda tag: lookup.get(tag, -1)).astype(int)


def type_records(records, types, j):
    """Auctions of type j, one record per log line even when several of its tags fall in the type."""
    return records[types == j].drop_duplicates('line')


def estimate_log(records, type_atoms, grid_x, sigma, quantile=OUTLIER_QUANTILE, min_ratio=OUTLIER_MIN_RATIO,
                 min_samples=MIN_PRICE_SAMPLES):
    '''
    Periodic supply curves of every item type from a parsed log
    :param type_atoms: per type atom sets; tags of one type are pooled
    :return: (curves list, report per type)
    '''
    types = type_of_tags(records, type_atoms)
    curves, reports = [], []
    for j in tqdm(range(len(type_atoms)), desc='estimate', disable=progress_disabled()):
        rows = type_records(records, types, j)
        if len(rows) < 2:
            raise ConfigurationError('item type %d (%s) has fewer than 2 log records'
                                     % (j, sorted(type_atoms[j])))
        rates, rate_report = estimate_arrival_rates(rows['time'].to_numpy(), quantile, min_ratio)
        cdf, price_report = estimate_win_prob(rows['time'].to_numpy(), rows['market_price'].to_numpy(), grid_x,
                                              min_samples)
        name = ','.join(sorted(type_atoms[j]))
        curves.append(build_periodic_curve(rates, cdf, grid_x, sigma, name=name))
        reports.append({'type': j, 'atoms': sorted(type_atoms[j]), 'records': int(len(rows)),
                        **rate_report, **price_report})
    return curves, reports


def empirical_sampler_from_log(records, type_atoms):
    '''
    EmpiricalSampler resampling the log's own interarrivals and prices per (type, hour)
    '''
    types = type_of_tags(records, type_atoms)
    gaps, prices = [], []
    for j in range(len(type_atoms)):
        rows = type_records(records, types, j)
        times = rows['time'].to_numpy()
        gap_buckets = [drop_outliers(g[g > 0]) for g in interarrival_buckets(times)]
        hours = np.floor(times).astype(np.int64) % HOURS_PER_DAY
        price_buckets = [rows['market_price'].to_numpy()[hours == h] for h in range(HOURS_PER_DAY)]
        for h in range(HOURS_PER_DAY):
            if gap_buckets[h].size == 0:
                gap_buckets[h] = _merged_bucket(gap_buckets, h, 1)[0]
            if price_buckets[h].size == 0:
                price_buckets[h] = _merged_bucket(price_buckets, h, 1)[0]
        gaps.append(gap_buckets)
        prices.append(price_buckets)
    return EmpiricalSampler(gaps, prices)
