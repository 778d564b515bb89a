"""Bandwidth selection by cross-validation."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from app.domain.boost import BoostConfig, boost_path
from app.domain.entities import Design
from app.domain.exceptions import InsufficientDataError
from app.domain.kernel import KernelFamily, KernelSpec, Sidedness, kernel_weights
from app.domain.panel import standardize

logger = logging.getLogger(__name__)

MIN_FIT_ROWS = 10


@dataclass(frozen=True)
class BandwidthGrid:
    values: tuple[float, ...]

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        if not values:
            raise ValueError("Bandwidth grid is empty")
        if any(v <= 0 or v > 1 for v in values):
            raise ValueError("Bandwidths must lie in (0, 1]")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ValueError("Bandwidth grid must be strictly increasing")
        object.__setattr__(self, "values", values)

    def __iter__(self):
        return iter(self.values)

    def __len__(self) -> int:
        return len(self.values)

    @classmethod
    def from_range(cls, start: float, stop: float, step: float) -> "BandwidthGrid":
        """Inclusive arithmetic grid, rounded to suppress float drift."""
        if step <= 0:
            raise ValueError("Grid step must be positive")
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        return cls(tuple(round(start + i * step, 10) for i in range(count)))

    @classmethod
    def parse(cls, text: str) -> "BandwidthGrid":
        """``start:stop:step`` or a comma-separated list."""
        text = text.strip()
        try:
            if ":" in text:
                start, stop, step = (float(p) for p in text.split(":"))
                return cls.from_range(start, stop, step)
            return cls(tuple(float(p) for p in text.split(",")))
        except ValueError as exc:
            raise ValueError(f"Invalid bandwidth grid {text!r}: {exc}") from None


class CvMode(str, Enum):
    OOS = "oos"
    WEIGHTED_LOO = "weighted-loo"


@dataclass(frozen=True)
class CvSpec:
    mode: CvMode = CvMode.OOS
    window: int = 20
    horizon: int = 1
    family: Optional[KernelFamily] = None
    local: bool = True

    def __post_init__(self):
        object.__setattr__(self, "mode", CvMode(self.mode))
        if self.family is not None and not isinstance(self.family, KernelFamily):
            object.__setattr__(self, "family", KernelFamily.parse(self.family))
        if self.window < 1:
            raise ValueError("CV window must be >= 1")
        if self.horizon < 1:
            raise ValueError("CV horizon must be >= 1")

    def kernel(self, config: BoostConfig, sided: Sidedness) -> KernelSpec:
        return KernelSpec(
            family=self.family or config.kernel.family,
            bandwidth=config.kernel.bandwidth,
            sided=sided,
        )


@dataclass(frozen=True)
class BandwidthChoice:
    bandwidth: float
    scores: dict = field(default_factory=dict)

    def rows(self) -> list[dict]:
        return [
            {"bandwidth": b, "score": s, "chosen": b == self.bandwidth}
            for b, s in sorted(self.scores.items())
        ]


def choose_bandwidth(scores: dict[float, float]) -> float:
    """argmin of the score table; ties go to the larger bandwidth."""
    best = min(scores.values())
    tied = [b for b, s in scores.items() if s <= best + 1e-12 * max(1.0, abs(best))]
    return max(tied)


def _score(config: BoostConfig, actual: np.ndarray, predicted: np.ndarray) -> np.ndarray:
    if config.loss.is_squared:
        return (actual - predicted) ** 2
    return config.loss.value(actual, predicted)


def cv_bandwidth_oos(
    design: Design,
    grid: BandwidthGrid,
    spec: CvSpec,
    config: BoostConfig,
) -> BandwidthChoice:
    """Recursive pseudo out-of-sample CV over the last ``spec.window`` responses.

    The forecast of row tau is fitted on rows whose response is observed by
    row tau's information date, with a one-sided kernel at u = 1.
    """
    n, h, omega = design.n, spec.horizon, spec.window
    first_train = n - omega - h + 1
    if first_train < MIN_FIT_ROWS:
        raise InsufficientDataError(omega + h - 1 + MIN_FIT_ROWS, n, "rows for the CV backtest")
    kernel = spec.kernel(config, Sidedness.ONE_SIDED_PAST)
    errors = {b: np.empty(omega) for b in grid}
    for k, tau in enumerate(range(n - omega, n)):
        train = design.rows(np.arange(tau - h + 1), forecast_row=design.regressors[tau])
        scaled, _ = standardize(train)
        for b in grid:
            fit = boost_path(
                scaled.regressors,
                scaled.response,
                scaled.times,
                1.0,
                config.replace(kernel=kernel.with_bandwidth(b)),
            )
            prediction = fit.predict(scaled.forecast_row)
            errors[b][k] = _score(config, np.array(design.response[tau]), np.array(prediction))
    scores = {b: float(np.mean(e)) for b, e in errors.items()}
    chosen = choose_bandwidth(scores)
    logger.debug("OOS CV over %d origins chose b=%.3f", omega, chosen)
    return BandwidthChoice(bandwidth=chosen, scores=scores)


def cv_bandwidth_loo(
    design: Design,
    grid: BandwidthGrid,
    t0: int,
    config: BoostConfig,
    spec: Optional[CvSpec] = None,
) -> BandwidthChoice:
    """Leave-one-out CV around row ``t0`` with a two-sided kernel.

    Each row tau is refitted without it at u = times[tau]; errors are weighted
    by the raw kernel K_b(times[tau] - times[t0]) / n unless ``spec.local`` is
    False, which gives the unweighted global criterion. The design is used as
    given (no re-standardization per fold).
    """
    spec = spec or CvSpec(mode=CvMode.WEIGHTED_LOO)
    n = design.n
    if not 0 <= t0 < n:
        raise ValueError(f"Row t0={t0} outside 0..{n - 1}")
    if n - 1 < MIN_FIT_ROWS:
        raise InsufficientDataError(MIN_FIT_ROWS + 1, n, "rows for leave-one-out CV")
    kernel = spec.kernel(config, Sidedness.TWO_SIDED)
    scores = {}
    for b in grid:
        kernel_b = kernel.with_bandwidth(b)
        if spec.local:
            outer = kernel_weights(kernel_b, design.times, design.times[t0], normalize=False).weights / n
        else:
            outer = np.full(n, 1.0 / n)
        fold_config = config.replace(kernel=kernel_b)
        total = 0.0
        for tau in range(n):
            if outer[tau] == 0.0:
                continue
            held = design.drop_row(tau)
            u = float(design.times[tau])
            fit = boost_path(held.regressors, held.response, held.times, u, fold_config)
            prediction = fit.predict(design.regressors[tau], time=u)
            total += outer[tau] * float(_score(config, np.array(design.response[tau]), np.array(prediction)))
        scores[b] = total
    chosen = choose_bandwidth(scores)
    logger.debug("LOO CV at row %d chose b=%.3f", t0, chosen)
    return BandwidthChoice(bandwidth=chosen, scores=scores)
