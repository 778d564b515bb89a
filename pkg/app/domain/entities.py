from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from app.domain.exceptions import LookAheadError, UnknownSeriesError


def _as_periods(dates, freq: str = "M") -> pd.PeriodIndex:
    if isinstance(dates, pd.PeriodIndex):
        return dates
    items = list(dates)
    if items and all(isinstance(d, pd.Period) for d in items):
        return pd.PeriodIndex(items)
    return pd.PeriodIndex(pd.to_datetime(items).to_period(freq))


def _frozen_array(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


# ── Panel data ───────────────────────────────────────────────────────


class TransformCode(IntEnum):
    """FRED-MD transformation codes."""

    LEVEL = 1
    DIFF = 2
    DIFF2 = 3
    LOG = 4
    DIFF_LOG = 5
    DIFF2_LOG = 6
    DIFF_RATIO = 7

    @property
    def uses_log(self) -> bool:
        return self in (TransformCode.LOG, TransformCode.DIFF_LOG, TransformCode.DIFF2_LOG)

    @property
    def requires_positive(self) -> bool:
        return self >= TransformCode.LOG


class TargetKind(str, Enum):
    LOG_GROWTH = "log-growth"
    LEVEL_DIFFERENCE = "level-difference"
    LEVEL = "level"


@dataclass(frozen=True)
class Panel:
    """Timestamped T x p observation matrix; NaN cells are missing."""

    values: np.ndarray
    dates: pd.PeriodIndex
    names: tuple[str, ...]
    codes: tuple[TransformCode, ...] = ()
    missing: Optional[np.ndarray] = None

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2:
            raise ValueError("Panel values must be a T x p matrix")
        n_rows, n_cols = values.shape
        if n_rows < 2 or n_cols < 1:
            raise ValueError("Panel needs at least 2 rows and 1 column")

        dates = _as_periods(self.dates)
        if len(dates) != n_rows:
            raise ValueError(f"Panel has {n_rows} rows but {len(dates)} dates")
        steps = np.diff(dates.asi8)
        if (steps <= 0).any() or np.unique(steps).size > 1:
            raise ValueError("Panel dates must be strictly increasing and evenly spaced")

        names = tuple(str(n) for n in self.names)
        if len(names) != n_cols:
            raise ValueError(f"Panel has {n_cols} columns but {len(names)} names")
        if len(set(names)) != n_cols:
            raise ValueError("Panel column names must be unique")

        codes = tuple(TransformCode(int(c)) for c in self.codes) or (TransformCode.LEVEL,) * n_cols
        if len(codes) != n_cols:
            raise ValueError(f"Panel has {n_cols} columns but {len(codes)} transform codes")

        missing = np.isnan(values)
        if self.missing is not None:
            missing = missing | np.asarray(self.missing, dtype=bool)
        values[missing] = np.nan

        object.__setattr__(self, "values", _frozen_array(values))
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "codes", codes)
        object.__setattr__(self, "missing", _frozen_array(missing, dtype=bool))

    @property
    def n_periods(self) -> int:
        return self.values.shape[0]

    @property
    def n_series(self) -> int:
        return self.values.shape[1]

    @property
    def last_date(self) -> pd.Period:
        return self.dates[-1]

    def index_of(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise UnknownSeriesError(name) from None

    def column(self, name: str) -> np.ndarray:
        return np.array(self.values[:, self.index_of(name)])

    def code_of(self, name: str) -> TransformCode:
        return self.codes[self.index_of(name)]

    def position(self, date) -> int:
        """Row index of ``date`` (may be negative or >= T for dates off the panel)."""
        period = pd.Period(date, freq=self.dates.freq)
        return int(period.ordinal - self.dates[0].ordinal)

    def truncate(self, end) -> "Panel":
        """Rows dated on or before ``end``."""
        stop = self.position(end) + 1
        if stop < 2:
            raise ValueError(f"Truncating at {end} leaves fewer than 2 rows")
        stop = min(stop, self.n_periods)
        return Panel(
            values=self.values[:stop],
            dates=self.dates[:stop],
            names=self.names,
            codes=self.codes,
        )

    def select(self, names: Sequence[str]) -> "Panel":
        idx = [self.index_of(n) for n in names]
        return Panel(
            values=self.values[:, idx],
            dates=self.dates,
            names=tuple(names),
            codes=tuple(self.codes[i] for i in idx),
        )

    def with_codes(self, codes: Sequence[TransformCode]) -> "Panel":
        return Panel(values=self.values, dates=self.dates, names=self.names, codes=tuple(codes))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(np.array(self.values), index=self.dates, columns=list(self.names))

    @classmethod
    def from_frame(
        cls,
        frame: pd.DataFrame,
        codes: Optional[Sequence[int]] = None,
    ) -> "Panel":
        return cls(
            values=frame.to_numpy(dtype=float),
            dates=_as_periods(frame.index),
            names=tuple(str(c) for c in frame.columns),
            codes=tuple(codes or ()),
        )


@dataclass(frozen=True)
class TargetSpec:
    series: str
    horizon: int = 1
    kind: TargetKind = TargetKind.LOG_GROWTH

    def __post_init__(self):
        object.__setattr__(self, "kind", TargetKind(self.kind))
        if int(self.horizon) < 1:
            raise ValueError("Target horizon must be >= 1")
        object.__setattr__(self, "horizon", int(self.horizon))

    def one_step(self) -> "TargetSpec":
        return TargetSpec(series=self.series, horizon=1, kind=self.kind)


@dataclass(frozen=True)
class Design:
    """Aligned response / lagged-regressor block for one estimation window.

    ``info_dates[i]`` is the latest date any regressor in row ``i`` was read
    from; assembly guarantees it is at least ``horizon`` periods before the
    response date.
    """

    response: np.ndarray
    regressors: np.ndarray
    times: np.ndarray
    dates: pd.PeriodIndex
    info_dates: pd.PeriodIndex
    columns: tuple[tuple[str, int], ...]
    horizon: int = 1
    forecast_row: Optional[np.ndarray] = None
    forecast_info_date: Optional[pd.Period] = None

    def __post_init__(self):
        response = np.asarray(self.response, dtype=float)
        regressors = np.asarray(self.regressors, dtype=float)
        if regressors.ndim != 2:
            raise ValueError("Design regressors must be an n x q matrix")
        n, q = regressors.shape
        if response.shape != (n,):
            raise ValueError(f"Design response has shape {response.shape}, expected ({n},)")
        times = np.asarray(self.times, dtype=float)
        if times.shape != (n,):
            raise ValueError("Design times must have one entry per row")
        if n and (times[0] <= 0 or times[-1] > 1 or (np.diff(times) <= 0).any()):
            raise ValueError("Design times must be strictly increasing in (0, 1]")
        if len(self.columns) != q:
            raise ValueError(f"Design has {q} columns but {len(self.columns)} column tags")
        dates = _as_periods(self.dates)
        info_dates = _as_periods(self.info_dates)
        if len(dates) != n or len(info_dates) != n:
            raise ValueError("Design dates must have one entry per row")
        if n and (dates.asi8 - info_dates.asi8 < self.horizon).any():
            raise LookAheadError("Design row reads data dated after its response date minus h")
        forecast_row = self.forecast_row
        if forecast_row is not None:
            forecast_row = np.asarray(forecast_row, dtype=float)
            if forecast_row.shape != (q,):
                raise ValueError(f"Forecast row has shape {forecast_row.shape}, expected ({q},)")

        object.__setattr__(self, "response", response)
        object.__setattr__(self, "regressors", regressors)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "info_dates", info_dates)
        object.__setattr__(self, "columns", tuple(tuple(c) for c in self.columns))
        object.__setattr__(self, "forecast_row", forecast_row)

    @property
    def n(self) -> int:
        return self.regressors.shape[0]

    @property
    def q(self) -> int:
        return self.regressors.shape[1]

    @classmethod
    def from_arrays(
        cls,
        regressors,
        response,
        times=None,
        horizon: int = 1,
        forecast_row=None,
        start: str = "2000-01",
    ) -> "Design":
        """Design with synthetic monthly dates; times default to i/n."""
        regressors = np.asarray(regressors, dtype=float)
        if regressors.ndim == 1:
            regressors = regressors[:, None]
        n, q = regressors.shape
        dates = pd.period_range(start, periods=n, freq="M") + horizon
        return cls(
            response=response,
            regressors=regressors,
            times=rescaled_times(n) if times is None else times,
            dates=dates,
            info_dates=dates - horizon,
            columns=tuple((f"x{j}", 0) for j in range(q)),
            horizon=horizon,
            forecast_row=forecast_row,
            forecast_info_date=dates[-1] if n else None,
        )

    def rows(
        self,
        index,
        rescale: bool = True,
        forecast_row=None,
        forecast_info_date=None,
    ) -> "Design":
        """Sub-design on the given rows; ``rescale`` recomputes times as i/n."""
        index = np.asarray(index)
        if index.dtype == bool:
            index = np.flatnonzero(index)
        n = index.size
        return Design(
            response=self.response[index],
            regressors=self.regressors[index],
            times=rescaled_times(n) if rescale else self.times[index],
            dates=self.dates[index],
            info_dates=self.info_dates[index],
            columns=self.columns,
            horizon=self.horizon,
            forecast_row=forecast_row,
            forecast_info_date=forecast_info_date,
        )

    def head(self, n_rows: int) -> "Design":
        return self.rows(np.arange(n_rows))

    def drop_row(self, row: int) -> "Design":
        mask = np.ones(self.n, dtype=bool)
        mask[row] = False
        return self.rows(mask, rescale=False)

    def with_regressors(self, regressors, forecast_row=None) -> "Design":
        return Design(
            response=self.response,
            regressors=regressors,
            times=self.times,
            dates=self.dates,
            info_dates=self.info_dates,
            columns=self.columns,
            horizon=self.horizon,
            forecast_row=forecast_row,
            forecast_info_date=self.forecast_info_date,
        )

    def with_response(self, response) -> "Design":
        return Design(
            response=response,
            regressors=self.regressors,
            times=self.times,
            dates=self.dates,
            info_dates=self.info_dates,
            columns=self.columns,
            horizon=self.horizon,
            forecast_row=self.forecast_row,
            forecast_info_date=self.forecast_info_date,
        )

    def select_columns(self, index: Sequence[int]) -> "Design":
        index = list(index)
        return Design(
            response=self.response,
            regressors=self.regressors[:, index],
            times=self.times,
            dates=self.dates,
            info_dates=self.info_dates,
            columns=tuple(self.columns[i] for i in index),
            horizon=self.horizon,
            forecast_row=None if self.forecast_row is None else self.forecast_row[index],
            forecast_info_date=self.forecast_info_date,
        )

    def column_index(self, series: str) -> list[int]:
        return [i for i, (name, _) in enumerate(self.columns) if name == series]


def rescaled_times(n: int) -> np.ndarray:
    """Rescaled time i/n for rows i = 1..n."""
    return np.arange(1, n + 1, dtype=float) / n


# ── Forecasting ──────────────────────────────────────────────────────


@dataclass(frozen=True)
class ForecastProblem:
    """Forecast of ``target`` at ``forecast_date`` from an information-set panel."""

    panel: Panel
    target: TargetSpec
    forecast_date: pd.Period

    def __post_init__(self):
        freq = self.panel.dates.freq
        forecast_date = pd.Period(self.forecast_date, freq=freq)
        object.__setattr__(self, "forecast_date", forecast_date)
        if self.panel.last_date > self.cutoff:
            raise LookAheadError(
                f"Information set ends {self.panel.last_date}, after cutoff {self.cutoff}"
            )

    @property
    def horizon(self) -> int:
        return self.target.horizon

    @property
    def cutoff(self) -> pd.Period:
        return self.forecast_date - self.target.horizon


@dataclass(frozen=True)
class MethodForecast:
    prediction: float
    bandwidth: Optional[float] = None
    stopping_iteration: Optional[int] = None
    info_date: Optional[pd.Period] = None
    sample_size: Optional[int] = None


@dataclass(frozen=True)
class ForecastRecord:
    date: pd.Period
    target: str
    method: str
    horizon: int
    prediction: float
    actual: float
    bandwidth: Optional[float] = None
    stopping_iteration: Optional[int] = None
    sample_size: Optional[int] = None

    @property
    def error(self) -> float:
        return self.actual - self.prediction

    @property
    def key(self) -> tuple:
        return (self.date, self.target, self.method, self.horizon)


LOG_COLUMNS = [
    "date",
    "target",
    "method",
    "horizon",
    "prediction",
    "actual",
    "bandwidth",
    "stopping_iteration",
    "sample_size",
]


@dataclass(frozen=True)
class ForecastLog:
    records: tuple[ForecastRecord, ...] = ()
    benchmark: str = "ar"

    def __post_init__(self):
        records = tuple(sorted(self.records, key=lambda r: (r.target, r.horizon, r.method, r.date)))
        keys = [r.key for r in records]
        if len(set(keys)) != len(keys):
            raise ValueError("ForecastLog holds more than one record per (date, target, method, horizon)")
        object.__setattr__(self, "records", records)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def methods(self) -> tuple[str, ...]:
        return tuple(sorted({r.method for r in self.records}))

    @property
    def targets(self) -> tuple[str, ...]:
        return tuple(sorted({r.target for r in self.records}))

    @property
    def horizons(self) -> tuple[int, ...]:
        return tuple(sorted({r.horizon for r in self.records}))

    def select(self, target: Optional[str] = None, horizon: Optional[int] = None) -> "ForecastLog":
        return ForecastLog(
            records=tuple(
                r
                for r in self.records
                if (target is None or r.target == target) and (horizon is None or r.horizon == horizon)
            ),
            benchmark=self.benchmark,
        )

    def merge(self, other: "ForecastLog") -> "ForecastLog":
        return ForecastLog(records=self.records + other.records, benchmark=self.benchmark)

    def _series(self, method: str, attribute: str, target, horizon) -> pd.Series:
        target, horizon = self._resolve(target, horizon)
        rows = [
            (r.date, getattr(r, attribute))
            for r in self.records
            if r.method == method and r.target == target and r.horizon == horizon
        ]
        if not rows:
            return pd.Series(dtype=float)
        dates, values = zip(*rows)
        values = [np.nan if v is None else v for v in values]
        return pd.Series(values, index=pd.PeriodIndex(dates), dtype=float).sort_index()

    def errors(self, method: str, target: Optional[str] = None, horizon: Optional[int] = None) -> pd.Series:
        return self._series(method, "error", target, horizon)

    def bandwidths(self, method: str, target: Optional[str] = None, horizon: Optional[int] = None) -> pd.Series:
        return self._series(method, "bandwidth", target, horizon)

    def sample_sizes(self, method: str, target: Optional[str] = None, horizon: Optional[int] = None) -> pd.Series:
        return self._series(method, "sample_size", target, horizon)

    def _resolve(self, target, horizon) -> tuple[str, int]:
        if target is None:
            if len(self.targets) != 1:
                raise ValueError(f"Log holds targets {self.targets}; pass one explicitly")
            target = self.targets[0]
        if horizon is None:
            if len(self.horizons) != 1:
                raise ValueError(f"Log holds horizons {self.horizons}; pass one explicitly")
            horizon = self.horizons[0]
        return target, int(horizon)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [
                {
                    "date": str(r.date),
                    "target": r.target,
                    "method": r.method,
                    "horizon": r.horizon,
                    "prediction": r.prediction,
                    "actual": r.actual,
                    "bandwidth": r.bandwidth,
                    "stopping_iteration": r.stopping_iteration,
                    "sample_size": r.sample_size,
                }
                for r in self.records
            ],
            columns=LOG_COLUMNS,
        )

    @classmethod
    def from_frame(cls, frame: pd.DataFrame, benchmark: str = "ar") -> "ForecastLog":
        def _opt(value, cast):
            return None if pd.isna(value) else cast(value)

        records = tuple(
            ForecastRecord(
                date=pd.Period(str(row["date"]), freq="M"),
                target=str(row["target"]),
                method=str(row["method"]),
                horizon=int(row["horizon"]),
                prediction=float(row["prediction"]),
                actual=float(row["actual"]),
                bandwidth=_opt(row.get("bandwidth"), float),
                stopping_iteration=_opt(row.get("stopping_iteration"), int),
                sample_size=_opt(row.get("sample_size"), int),
            )
            for _, row in frame.iterrows()
        )
        return cls(records=records, benchmark=benchmark)


SUBPERIODS = {
    "pre-gm": ("1971-09", "1982-12"),
    "gm": ("1983-01", "2006-12"),
    "post-gm": ("2007-01", "2018-08"),
}


@dataclass(frozen=True)
class EvalWindow:
    """Closed date range [start, end]; open ends extend to the log's span."""

    start: Optional[pd.Period] = None
    end: Optional[pd.Period] = None
    label: str = "full"

    def __post_init__(self):
        start = None if self.start is None else pd.Period(self.start, freq="M")
        end = None if self.end is None else pd.Period(self.end, freq="M")
        if start is not None and end is not None and start > end:
            raise ValueError(f"Evaluation window starts {start} after it ends {end}")
        object.__setattr__(self, "start", start)
        object.__setattr__(self, "end", end)

    @classmethod
    def preset(cls, label: str) -> "EvalWindow":
        if label == "full":
            return cls()
        if label not in SUBPERIODS:
            raise ValueError(f"Unknown subperiod {label!r}; choose from full, {', '.join(SUBPERIODS)}")
        start, end = SUBPERIODS[label]
        return cls(start=start, end=end, label=label)

    @classmethod
    def parse(cls, text: str) -> "EvalWindow":
        if ":" in text:
            start, end = text.split(":", 1)
            return cls(start=start or None, end=end or None, label=text)
        return cls.preset(text)

    def mask(self, dates: pd.PeriodIndex) -> np.ndarray:
        keep = np.ones(len(dates), dtype=bool)
        if self.start is not None:
            keep &= dates >= self.start
        if self.end is not None:
            keep &= dates <= self.end
        return keep


# ── Simulation ───────────────────────────────────────────────────────


class Innovation(str, Enum):
    GAUSSIAN = "gauss"
    T5 = "t5"

    @classmethod
    def parse(cls, text: str) -> "Innovation":
        return cls.GAUSSIAN if text in ("gauss", "gaussian", "normal") else cls(text)


class VarianceBreak(str, Enum):
    """How DGP 2's post-break D(0, 2.5) is read."""

    VARIANCE = "variance"
    SD = "sd"


@dataclass(frozen=True)
class DgpSpec:
    dgp_id: int
    innovation: Innovation = Innovation.GAUSSIAN
    T: int = 200
    d: int = 100
    seed: int = 0
    burn_in: int = 100
    rho: float = 0.6
    base_coef: float = 0.5
    noise_scale: float = 1.0
    variance_break: VarianceBreak = VarianceBreak.VARIANCE

    def __post_init__(self):
        if not 1 <= int(self.dgp_id) <= 14:
            raise ValueError("DGP id must be in 1..14")
        if self.T < 50:
            raise ValueError("DGP length T must be >= 50")
        if self.d < 4:
            raise ValueError("DGP exogenous count d must be >= 4")
        if self.burn_in < 0:
            raise ValueError("Burn-in must be >= 0")
        object.__setattr__(self, "innovation", Innovation(self.innovation))
        object.__setattr__(self, "variance_break", VarianceBreak(self.variance_break))

    @property
    def locally_stationary(self) -> bool:
        return self.dgp_id in (13, 14)


@dataclass(frozen=True)
class McResult:
    """Per-method squared forecast errors over the retained replications."""

    dgp_id: int
    innovation: Innovation
    methods: tuple[str, ...]
    squared_errors: dict = field(default_factory=dict)
    replications: int = 0
    excluded: tuple[int, ...] = ()
    master_seed: int = 0
    denominator: str = "boost"
    bandwidths: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.denominator not in self.methods:
            raise ValueError(f"Denominator method {self.denominator!r} missing from {self.methods}")
        lengths = {len(self.squared_errors[m]) for m in self.methods}
        if len(lengths) > 1:
            raise ValueError("Every method must hold one squared error per retained replication")

    @property
    def retained(self) -> int:
        return len(self.squared_errors[self.denominator])

    def msfe(self, method: str) -> float:
        errors = np.asarray(self.squared_errors[method], dtype=float)
        return float(np.sum(errors) / errors.size) if errors.size else float("nan")

    def relative(self, method: str) -> float:
        return self.msfe(method) / self.msfe(self.denominator)

    def relative_table(self) -> dict[str, float]:
        return {m: self.relative(m) for m in self.methods}
