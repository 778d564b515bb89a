"""Named forecasting methods and the method suites used by the harnesses.

Each method is a :class:`Forecaster` that maps a :class:`ForecastProblem`
(information-set panel, target, forecast date) to a point forecast. All
data preparation (transforms, standardization, factor extraction and
bandwidth selection) happens inside ``forecast`` using only the problem's
panel, which ends at the forecast cutoff.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from app.domain.benchmarks import (
    ArSpec,
    ar_forecast,
    di_forecast,
    extract_factors,
    invariant_boost_forecast,
    lasso_forecast,
    rolling_bandwidth,
)
from app.domain.boost import BoostConfig, LearnerKind, Stopping, fit_forecast
from app.domain.entities import Design, ForecastProblem, MethodForecast
from app.domain.exceptions import ConfigurationError, LookAheadError
from app.domain.kernel import KernelFamily, KernelSpec, Sidedness
from app.domain.panel import assemble_design, build_target
from app.domain.ports import Forecaster
from app.domain.tune import BandwidthGrid, CvSpec, cv_bandwidth_oos

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SuiteSettings:
    """Tuning shared by the methods of one comparison."""

    lags: int = 3
    ar_order: int = 4
    rolling_fraction: Optional[float] = None
    rolling_length: Optional[int] = 120
    cv_window: int = 60
    grid: BandwidthGrid = field(default_factory=lambda: BandwidthGrid.from_range(0.3, 1.0, 0.025))
    lc_family: KernelFamily = KernelFamily.UNIFORM
    ll_family: KernelFamily = KernelFamily.GAUSSIAN
    factor_count: int = 8
    factor_lags: int = 3
    di_factor_count: int = 4
    di_factor_lags: int = 0
    boost: BoostConfig = field(default_factory=BoostConfig)
    fixed_bandwidth: Optional[float] = None

    def __post_init__(self):
        if self.rolling_fraction is None and self.rolling_length is None:
            raise ValueError("Set either rolling_fraction or rolling_length")
        if self.rolling_fraction is not None and not 0 < self.rolling_fraction <= 1:
            raise ValueError("rolling_fraction must lie in (0, 1]")
        if self.lags < 0 or self.ar_order < 1:
            raise ValueError("lags must be >= 0 and ar_order >= 1")

    def rolling_rows(self, n: int) -> int:
        if self.rolling_fraction is not None:
            # rows kept by the one-sided uniform kernel with b = rolling_fraction
            return max(1, math.ceil(self.rolling_fraction * n - 1e-9))
        return min(self.rolling_length, n)


SIMULATION = SuiteSettings(
    lags=2,
    ar_order=3,
    rolling_fraction=0.2,
    rolling_length=None,
    cv_window=20,
    grid=BandwidthGrid.from_range(0.3, 1.0, 0.1),
    lc_family=KernelFamily.UNIFORM,
    ll_family=KernelFamily.UNIFORM,
)

MACRO = SuiteSettings()

PRESETS = {"simulation": SIMULATION, "macro": MACRO}

SIMULATION_METHODS = ("boost", "ar", "rolling-ar", "rolling-boost", "lc-boost", "ll-boost", "lasso")
MACRO_METHODS = (
    "ar",
    "tvar",
    "lasso",
    "boost",
    "lc-boost",
    "ll-boost",
    "di",
    "boost-factor",
    "lc-boost-factor",
    "ll-boost-factor",
    "rolling-boost-factor",
)


def _check_cutoff(design: Design, problem: ForecastProblem) -> None:
    if design.forecast_info_date is not None and design.forecast_info_date > problem.cutoff:
        raise LookAheadError(
            f"Forecast row reads {design.forecast_info_date}, after cutoff {problem.cutoff}"
        )


# ── Autoregressions ──────────────────────────────────────────────────


@dataclass(frozen=True)
class ArForecaster(Forecaster):
    name: str
    settings: SuiteSettings
    rolling: bool = False

    def forecast(self, problem: ForecastProblem) -> MethodForecast:
        panel, target = problem.panel, problem.target
        y = build_target(panel, target)
        lag_source = build_target(panel, target.one_step())
        window = self.settings.rolling_rows(panel.n_periods) if self.rolling else None
        if window is not None:
            window = max(window, self.settings.ar_order + 3)
        spec = ArSpec(order=self.settings.ar_order, rolling=window)
        prediction = ar_forecast(y, spec, target.horizon, lag_source=lag_source)
        return MethodForecast(
            prediction=prediction,
            info_date=panel.last_date,
            sample_size=window or int(np.isfinite(y).sum()),
        )


@dataclass(frozen=True)
class DiForecaster(Forecaster):
    name: str
    settings: SuiteSettings

    def forecast(self, problem: ForecastProblem) -> MethodForecast:
        panel, target = problem.panel, problem.target
        factors, _ = extract_factors(panel, self.settings.di_factor_count)
        prediction = di_forecast(
            build_target(panel, target),
            factors,
            target.horizon,
            lag_source=build_target(panel, target.one_step()),
            own_lags=self.settings.ar_order,
            factor_lags=self.settings.di_factor_lags,
        )
        return MethodForecast(prediction=prediction, info_date=panel.last_date)


# ── Penalized regressions ────────────────────────────────────────────


@dataclass(frozen=True)
class LassoForecaster(Forecaster):
    name: str
    settings: SuiteSettings

    def forecast(self, problem: ForecastProblem) -> MethodForecast:
        design = assemble_design(problem.panel, problem.target, self.settings.lags)
        _check_cutoff(design, problem)
        return MethodForecast(
            prediction=lasso_forecast(design),
            info_date=design.forecast_info_date,
            sample_size=design.n,
        )


# ── Boosting ─────────────────────────────────────────────────────────


class DesignKind(str, Enum):
    PANEL = "panel"
    OWN_LAGS = "own-lags"
    FACTORS = "factors"


class BandwidthMode(str, Enum):
    INVARIANT = "invariant"
    ROLLING = "rolling"
    CV = "cv"
    FIXED = "fixed"


@dataclass(frozen=True)
class BoostForecaster(Forecaster):
    name: str
    settings: SuiteSettings
    learner: LearnerKind = LearnerKind.LC
    bandwidth: BandwidthMode = BandwidthMode.CV
    design_kind: DesignKind = DesignKind.PANEL

    def design(self, problem: ForecastProblem) -> Design:
        panel, target = problem.panel, problem.target
        if self.design_kind == DesignKind.FACTORS:
            factors, _ = extract_factors(panel, self.settings.factor_count)
            design = assemble_design(
                panel,
                target,
                self.settings.factor_lags,
                extra=factors,
                extra_lags=self.settings.factor_lags,
                include_panel=False,
            )
        elif self.design_kind == DesignKind.OWN_LAGS:
            design = assemble_design(panel, target, self.settings.ar_order - 1, include_panel=False)
        else:
            design = assemble_design(panel, target, self.settings.lags)
        _check_cutoff(design, problem)
        return design

    def config(self) -> BoostConfig:
        family = self.settings.ll_family if self.learner is LearnerKind.LL else self.settings.lc_family
        kernel = KernelSpec(family=family, bandwidth=1.0, sided=Sidedness.ONE_SIDED_PAST)
        return self.settings.boost.replace(learner=self.learner, kernel=kernel)

    def forecast(self, problem: ForecastProblem) -> MethodForecast:
        design = self.design(problem)
        config = self.config()
        bandwidth: Optional[float] = None
        if self.bandwidth == BandwidthMode.INVARIANT:
            prediction, fit = invariant_boost_forecast(design, config)
        elif self.bandwidth == BandwidthMode.ROLLING:
            rows = self.settings.rolling_rows(design.n)
            if self.settings.rolling_fraction is not None:
                prediction, fit = invariant_boost_forecast(design, config, self.settings.rolling_fraction)
                bandwidth = self.settings.rolling_fraction
            else:
                b = rolling_bandwidth(rows, design.n)
                prediction, fit, _ = fit_forecast(
                    design, config.replace(kernel=KernelSpec(KernelFamily.UNIFORM, b, Sidedness.ONE_SIDED_PAST))
                )
                bandwidth = min(1.0, rows / design.n)
        else:
            if self.bandwidth == BandwidthMode.FIXED and self.settings.fixed_bandwidth is not None:
                bandwidth = self.settings.fixed_bandwidth
            else:
                spec = CvSpec(window=self.settings.cv_window, horizon=problem.horizon, family=config.kernel.family)
                bandwidth = cv_bandwidth_oos(design, self.settings.grid, spec, config).bandwidth
            prediction, fit, _ = fit_forecast(design, config.with_bandwidth(bandwidth))
        return MethodForecast(
            prediction=prediction,
            bandwidth=bandwidth,
            stopping_iteration=fit.chosen_m,
            info_date=design.forecast_info_date,
            sample_size=design.n,
        )


# ── Registry ─────────────────────────────────────────────────────────

# name -> (forecaster class, keyword arguments); ``None`` bandwidth means cv or fixed
_REGISTRY: dict[str, tuple[type, dict]] = {
    "ar": (ArForecaster, {}),
    "rolling-ar": (ArForecaster, {"rolling": True}),
    "tvar": (BoostForecaster, {"bandwidth": None, "design_kind": DesignKind.OWN_LAGS}),
    "boost": (BoostForecaster, {"bandwidth": BandwidthMode.INVARIANT}),
    "rolling-boost": (BoostForecaster, {"bandwidth": BandwidthMode.ROLLING}),
    "lasso": (LassoForecaster, {}),
    "lc-boost": (BoostForecaster, {"bandwidth": None}),
    "ll-boost": (BoostForecaster, {"learner": LearnerKind.LL, "bandwidth": None}),
    "di": (DiForecaster, {}),
    "boost-factor": (
        BoostForecaster,
        {"bandwidth": BandwidthMode.INVARIANT, "design_kind": DesignKind.FACTORS},
    ),
    "lc-boost-factor": (BoostForecaster, {"bandwidth": None, "design_kind": DesignKind.FACTORS}),
    "ll-boost-factor": (
        BoostForecaster,
        {"learner": LearnerKind.LL, "bandwidth": None, "design_kind": DesignKind.FACTORS},
    ),
    "rolling-boost-factor": (
        BoostForecaster,
        {"bandwidth": BandwidthMode.ROLLING, "design_kind": DesignKind.FACTORS},
    ),
}

METHOD_NAMES = tuple(_REGISTRY)


def build_method(name: str, settings: SuiteSettings, method: Optional[str] = None) -> Forecaster:
    """Forecaster for registered ``method`` (default ``name``) reported as ``name``."""
    method = method or name
    if method not in _REGISTRY:
        raise ConfigurationError(f"Unknown method {method!r}; choose from {', '.join(METHOD_NAMES)}")
    cls, kwargs = _REGISTRY[method]
    kwargs = dict(kwargs)
    if "bandwidth" in kwargs and kwargs["bandwidth"] is None:
        kwargs["bandwidth"] = (
            BandwidthMode.FIXED if settings.fixed_bandwidth is not None else BandwidthMode.CV
        )
    return cls(name=name, settings=settings, **kwargs)


def build_suite(names: Sequence[str], settings: SuiteSettings) -> dict[str, Forecaster]:
    """Forecasters keyed by name, in the given order; ``alias=method`` renames a method."""
    entries = [n.split("=", 1) if "=" in n else (n, n) for n in names]
    labels = [label for label, _ in entries]
    if len(set(labels)) != len(labels):
        raise ConfigurationError(f"Duplicate method names in {labels}")
    if not settings.boost.loss.is_squared and settings.boost.stopping is Stopping.AICC:
        raise ConfigurationError(
            f"Loss {settings.boost.loss.name} cannot use AICc stopping; pass --stop cv or --stop fixed"
        )
    return {label: build_method(label, settings, method) for label, method in entries}
