"""Transforms, forecast targets and lagged design assembly for panels."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from app.domain.entities import (
    Design,
    Panel,
    TargetKind,
    TargetSpec,
    TransformCode,
    rescaled_times,
)
from app.domain.exceptions import (
    InsufficientDataError,
    MissingDataError,
    TransformDomainError,
)

logger = logging.getLogger(__name__)

MIN_DESIGN_ROWS = 5

_DIFFERENCE_ORDER = {
    TransformCode.LEVEL: 0,
    TransformCode.DIFF: 1,
    TransformCode.DIFF2: 2,
    TransformCode.LOG: 0,
    TransformCode.DIFF_LOG: 1,
    TransformCode.DIFF2_LOG: 2,
    TransformCode.DIFF_RATIO: 1,
}


def first_valid(series: np.ndarray) -> int:
    """Index of the first non-missing entry (len(series) if none)."""
    valid = ~np.isnan(np.asarray(series, dtype=float))
    return int(np.argmax(valid)) if valid.any() else len(valid)


def check_gaps(series: np.ndarray, name: str) -> None:
    """Leading missing values are allowed; none after the first observation."""
    valid = ~np.isnan(series)
    if not valid.any():
        raise MissingDataError(name, 0)
    start = int(np.argmax(valid))
    gaps = np.flatnonzero(~valid[start:])
    if gaps.size:
        raise MissingDataError(name, start + int(gaps[0]))


def _check_positive(series: np.ndarray, name: str) -> None:
    bad = np.flatnonzero(~np.isnan(series) & (series <= 0))
    if bad.size:
        raise TransformDomainError(name, int(bad[0]))


def _difference(series: np.ndarray, order: int) -> np.ndarray:
    out = series
    for _ in range(order):
        step = np.full_like(out, np.nan)
        step[1:] = out[1:] - out[:-1]
        out = step
    return out


def apply_transform(series, code, name: str = "series") -> np.ndarray:
    """Apply a FRED-MD transformation code; undefined leading entries are NaN."""
    x = np.array(series, dtype=float)
    code = TransformCode(int(code))
    check_gaps(x, name)
    if code.requires_positive:
        _check_positive(x, name)
    if code.uses_log:
        x = np.log(x)
    elif code == TransformCode.DIFF_RATIO:
        ratio = np.full_like(x, np.nan)
        ratio[1:] = x[1:] / x[:-1] - 1.0
        x = ratio
    return _difference(x, _DIFFERENCE_ORDER[code])


def transform_panel(panel: Panel, remap: Optional[Mapping[str, int]] = None) -> Panel:
    """Stationary version of ``panel``; ``remap`` overrides per-series codes."""
    remap = dict(remap or {})
    columns = []
    for name, code in zip(panel.names, panel.codes):
        code = TransformCode(int(remap.get(name, code)))
        columns.append(apply_transform(panel.column(name), code, name=name))
    return Panel(
        values=np.column_stack(columns),
        dates=panel.dates,
        names=panel.names,
    )


def build_target(panel: Panel, spec: TargetSpec) -> np.ndarray:
    """h-period target aligned to panel dates; the first h entries are NaN."""
    s = panel.column(spec.series)
    check_gaps(s, spec.series)
    h = spec.horizon
    out = np.full_like(s, np.nan)
    if spec.kind == TargetKind.LEVEL:
        return s
    if spec.kind == TargetKind.LOG_GROWTH:
        _check_positive(s, spec.series)
        logs = np.log(s)
        out[h:] = (1200.0 / h) * (logs[h:] - logs[:-h])
    else:
        out[h:] = (12.0 / h) * (s[h:] - s[:-h])
    return out


def assemble_design(
    panel: Panel,
    target: TargetSpec,
    lags: int,
    extra: Optional[np.ndarray] = None,
    *,
    extra_lags: Optional[int] = None,
    extra_names: Optional[Sequence[str]] = None,
    include_panel: bool = True,
    remap: Optional[Mapping[str, int]] = None,
    min_rows: int = MIN_DESIGN_ROWS,
) -> Design:
    """Direct h-step design: response Y^h_t on predictors dated t-h, ..., t-h-lags.

    Predictors are the one-period target (own lags), the transformed remaining
    panel columns (``include_panel``) and the optional ``extra`` T x k block
    (e.g. factors) lagged ``extra_lags`` times. Rows with any missing cell are
    trimmed from the front; the forecast row holds the latest observations.
    """
    if lags < 0:
        raise ValueError("lags must be >= 0")
    h = target.horizon
    y = build_target(panel, target)

    blocks: list[tuple[str, np.ndarray, int]] = [(target.series, build_target(panel, target.one_step()), lags)]
    if include_panel:
        others = [n for n in panel.names if n != target.series]
        if others:
            stationary = transform_panel(panel.select(others), remap)
            blocks += [(n, stationary.values[:, i], lags) for i, n in enumerate(others)]
    if extra is not None:
        extra = np.asarray(extra, dtype=float)
        if extra.ndim == 1:
            extra = extra[:, None]
        if extra.shape[0] != panel.n_periods:
            raise ValueError(f"Extra block has {extra.shape[0]} rows, panel has {panel.n_periods}")
        names = list(extra_names or [f"F{i + 1}" for i in range(extra.shape[1])])
        n_extra_lags = lags if extra_lags is None else extra_lags
        for i, name in enumerate(names):
            check_gaps(extra[:, i], name)
            blocks.append((name, extra[:, i], n_extra_lags))

    start = max([first_valid(y)] + [first_valid(s) + h + n_lags for _, s, n_lags in blocks])
    rows = np.arange(start, panel.n_periods)
    if rows.size < min_rows:
        raise InsufficientDataError(min_rows, int(rows.size), "design rows")

    last = panel.n_periods - 1
    regressors = np.empty((rows.size, sum(n_lags + 1 for _, _, n_lags in blocks)))
    forecast_row = np.empty(regressors.shape[1])
    columns = []
    c = 0
    for name, series, n_lags in blocks:
        for lag in range(n_lags + 1):
            regressors[:, c] = series[rows - h - lag]
            forecast_row[c] = series[last - lag]
            columns.append((name, lag))
            c += 1

    logger.debug(
        "Assembled design for %s h=%d: n=%d q=%d first row %s",
        target.series, h, rows.size, regressors.shape[1], panel.dates[start],
    )
    return Design(
        response=y[rows],
        regressors=regressors,
        times=rescaled_times(rows.size),
        dates=panel.dates[rows],
        info_dates=panel.dates[rows - h],
        columns=tuple(columns),
        horizon=h,
        forecast_row=forecast_row,
        forecast_info_date=panel.dates[last],
    )


@dataclass(frozen=True)
class ColumnScaler:
    """Estimation-window column statistics; inactive columns map to zero."""

    means: np.ndarray
    scales: np.ndarray
    active: np.ndarray

    def transform(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = (x - self.means) / self.scales
        return np.where(self.active, out, 0.0)


def standardize(design: Design) -> tuple[Design, ColumnScaler]:
    """Center and scale each regressor to unit standard deviation over the window."""
    X = design.regressors
    means = X.mean(axis=0)
    sd = X.std(axis=0)
    active = sd > 1e-12 * np.maximum(1.0, np.abs(means))
    scaler = ColumnScaler(means=means, scales=np.where(active, sd, 1.0), active=active)
    forecast_row = None if design.forecast_row is None else scaler.transform(design.forecast_row)
    return design.with_regressors(scaler.transform(X), forecast_row=forecast_row), scaler
