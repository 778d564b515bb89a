"""Expanding-window pseudo-real-time forecasting driver."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np
import pandas as pd

from app.domain.entities import ForecastLog, ForecastProblem, ForecastRecord, Panel, TargetSpec
from app.domain.exceptions import DomainError, InsufficientDataError, LookAheadError
from app.domain.panel import build_target
from app.domain.ports import Forecaster, TaskRunner

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class OriginTask:
    """All methods for one (target, horizon, forecast date)."""

    panel: Panel
    target: TargetSpec
    date: pd.Period
    methods: tuple[Forecaster, ...]


@dataclass(frozen=True)
class OriginOutcome:
    records: tuple[ForecastRecord, ...]
    failures: tuple[tuple[str, str], ...] = ()


def run_origin(task: OriginTask) -> OriginOutcome:
    """Forecast ``task.date`` from the panel truncated at date - h."""
    panel, target = task.panel, task.target
    actual = float(build_target(panel, target)[panel.position(task.date)])
    problem = ForecastProblem(
        panel=panel.truncate(task.date - target.horizon),
        target=target,
        forecast_date=task.date,
    )
    records, failures = [], []
    for method in task.methods:
        try:
            result = method.forecast(problem)
        except LookAheadError:
            raise
        except (DomainError, np.linalg.LinAlgError, ValueError) as exc:
            failures.append((method.name, str(exc)))
            continue
        if result.info_date is not None and result.info_date > problem.cutoff:
            raise LookAheadError(f"{method.name} read {result.info_date} for a forecast of {task.date}")
        records.append(
            ForecastRecord(
                date=task.date,
                target=target.series,
                method=method.name,
                horizon=target.horizon,
                prediction=float(result.prediction),
                actual=actual,
                bandwidth=result.bandwidth,
                stopping_iteration=result.stopping_iteration,
                sample_size=result.sample_size,
            )
        )
    return OriginOutcome(records=tuple(records), failures=tuple(failures))


def forecast_dates(
    panel: Panel,
    target: TargetSpec,
    oos_start=None,
    oos_end=None,
    initial_window: int = 120,
) -> pd.PeriodIndex:
    """Forecast dates with an observed target; the default start leaves
    ``initial_window`` periods of history before the first cutoff."""
    h = target.horizon
    first = panel.position(oos_start) if oos_start is not None else initial_window - 1 + h
    last = panel.n_periods - 1 if oos_end is None else min(panel.position(oos_end), panel.n_periods - 1)
    if first - h < 1:
        raise InsufficientDataError(h + 1, max(first, 0), "periods before the first forecast date")
    if first > last:
        raise InsufficientDataError(first + 1, panel.n_periods, "periods for the out-of-sample span")
    return panel.dates[first : last + 1]


def run_expanding(
    panel: Panel,
    targets: Sequence[TargetSpec],
    methods: Mapping[str, Forecaster],
    runner: TaskRunner,
    oos_start=None,
    oos_end=None,
    initial_window: int = 120,
    benchmark: str = "ar",
) -> ForecastLog:
    """One record per (date, target, method, horizon); failed fits leave gaps."""
    forecasters = tuple(methods.values())
    tasks = [
        OriginTask(panel=panel, target=target, date=date, methods=forecasters)
        for target in targets
        for date in forecast_dates(panel, target, oos_start, oos_end, initial_window)
    ]
    logger.info(
        "Running %d origins for %d methods over %d target/horizon pairs",
        len(tasks), len(forecasters), len(targets),
    )
    records: list[ForecastRecord] = []
    for task, outcome in zip(tasks, runner.map(run_origin, tasks)):
        records.extend(outcome.records)
        for name, message in outcome.failures:
            logger.warning(
                "%s failed for %s h=%d at %s: %s",
                name, task.target.series, task.target.horizon, task.date, message,
            )
    return ForecastLog(records=tuple(records), benchmark=benchmark)
