"""Forecast-evaluation metrics over a :class:`ForecastLog`.

Every ratio is computed on the dates where both methods have a record.
"""

from __future__ import annotations

import logging
from typing import Iterable, Optional

import numpy as np
import pandas as pd

from app.domain.entities import EvalWindow, ForecastLog
from app.domain.exceptions import UndefinedRatioError

logger = logging.getLogger(__name__)


def _paired_squared_errors(
    log: ForecastLog,
    method: str,
    benchmark: Optional[str],
    target: Optional[str],
    horizon: Optional[int],
    window: Optional[EvalWindow] = None,
) -> tuple[pd.Series, pd.Series]:
    benchmark = benchmark or log.benchmark
    mine = log.errors(method, target, horizon).dropna()
    base = log.errors(benchmark, target, horizon).dropna()
    common = mine.index.intersection(base.index).sort_values()
    if window is not None:
        common = common[window.mask(common)]
    return mine.loc[common] ** 2, base.loc[common] ** 2


def relative_msfe(
    log: ForecastLog,
    method: str,
    window: Optional[EvalWindow] = None,
    target: Optional[str] = None,
    horizon: Optional[int] = None,
    benchmark: Optional[str] = None,
) -> float:
    """Sum of squared errors of ``method`` over that of the benchmark on the window."""
    num, den = _paired_squared_errors(log, method, benchmark, target, horizon, window)
    total = float(den.sum())
    if den.empty or total <= 0.0:
        label = window.label if window is not None else "full"
        raise UndefinedRatioError(
            f"Benchmark {benchmark or log.benchmark} has zero squared error over window {label}"
        )
    return float(num.sum()) / total


def msfe_by_start_date(
    log: ForecastLog,
    method: str,
    end=None,
    target: Optional[str] = None,
    horizon: Optional[int] = None,
    benchmark: Optional[str] = None,
) -> pd.Series:
    """Relative MSFE over [T1, end] for every start date T1 on the paired dates."""
    window = EvalWindow(end=end) if end is not None else None
    num, den = _paired_squared_errors(log, method, benchmark, target, horizon, window)
    if den.empty:
        raise UndefinedRatioError("No paired records to evaluate")
    num_tail = num.iloc[::-1].cumsum().iloc[::-1]
    den_tail = den.iloc[::-1].cumsum().iloc[::-1]
    ratio = num_tail / den_tail.where(den_tail > 0)
    ratio.name = method
    return ratio


def _centered_sums(series: pd.Series, delta: int) -> pd.Series:
    """Sum over dates within ``delta`` periods of each date (missing dates dropped)."""
    ordinals = series.index.asi8
    values = np.concatenate([[0.0], np.cumsum(series.to_numpy(dtype=float))])
    lo = np.searchsorted(ordinals, ordinals - delta, side="left")
    hi = np.searchsorted(ordinals, ordinals + delta, side="right")
    return pd.Series(values[hi] - values[lo], index=series.index)


def local_msfe(
    log: ForecastLog,
    method: str,
    delta: int = 70,
    target: Optional[str] = None,
    horizon: Optional[int] = None,
    benchmark: Optional[str] = None,
) -> pd.Series:
    """Centered rolling ratio of squared-error sums over [t0 - delta, t0 + delta]."""
    if delta < 1:
        raise ValueError("delta must be >= 1")
    num, den = _paired_squared_errors(log, method, benchmark, target, horizon)
    if den.empty:
        raise UndefinedRatioError("No paired records to evaluate")
    den_sums = _centered_sums(den, delta)
    ratio = _centered_sums(num, delta) / den_sums.where(den_sums > 0)
    ratio.name = method
    return ratio


def rl_msfe(
    log: ForecastLog,
    first: str,
    second: str,
    delta: int = 70,
    target: Optional[str] = None,
    horizon: Optional[int] = None,
) -> pd.Series:
    """Pointwise ratio of the local MSFE of ``first`` to that of ``second``."""
    a = local_msfe(log, first, delta, target, horizon)
    b = local_msfe(log, second, delta, target, horizon)
    common = a.index.intersection(b.index)
    ratio = a.loc[common] / b.loc[common]
    ratio.name = f"{first}/{second}"
    return ratio


def local_bandwidth(
    log: ForecastLog,
    method: str,
    delta: int = 70,
    target: Optional[str] = None,
    horizon: Optional[int] = None,
) -> pd.Series:
    """Centered rolling mean of the chosen bandwidths; 1 for methods without any."""
    if delta < 1:
        raise ValueError("delta must be >= 1")
    chosen = log.bandwidths(method, target, horizon)
    if chosen.empty:
        return chosen
    if chosen.isna().all():
        return pd.Series(1.0, index=chosen.index, name=method)
    chosen = chosen.dropna()
    counts = _centered_sums(pd.Series(1.0, index=chosen.index), delta)
    mean = _centered_sums(chosen, delta) / counts
    mean.name = method
    return mean


def rolling_window_bandwidth(sample_sizes: pd.Series, length: int = 120) -> pd.Series:
    """Fraction of the available sample a fixed ``length`` window uses."""
    sizes = sample_sizes.astype(float)
    return (length / sizes).clip(upper=1.0)


def subperiod_table(
    log: ForecastLog,
    windows: Iterable[EvalWindow],
    horizon: int,
    methods: Optional[Iterable[str]] = None,
    targets: Optional[Iterable[str]] = None,
) -> dict[str, pd.DataFrame]:
    """Relative MSFE tables (methods x targets), one per evaluation window."""
    methods = list(methods or log.methods)
    targets = list(targets or log.targets)
    tables = {}
    for window in windows:
        table = pd.DataFrame(index=methods, columns=targets, dtype=float)
        for target in targets:
            for method in methods:
                try:
                    table.loc[method, target] = relative_msfe(log, method, window, target, horizon)
                except UndefinedRatioError as exc:
                    logger.warning("Skipping %s/%s over %s: %s", method, target, window.label, exc)
        table.index.name = "method"
        tables[window.label] = table
    return tables
