"""
Application layer use cases.

Each use case receives ports (panel source, artifact store, task runner) via
constructor injection and contains only orchestration logic. Every run writes
its tables through the artifact store plus a ``manifest.json`` describing the
resolved configuration, so outputs can be regenerated from the manifest alone.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import pandas as pd

from app import __version__
from app.application.expanding import run_expanding
from app.application.methods import SuiteSettings, build_suite
from app.application.montecarlo import monte_carlo
from app.domain.boost import BoostConfig
from app.domain.entities import (
    DgpSpec,
    EvalWindow,
    ForecastLog,
    Innovation,
    Panel,
    SUBPERIODS,
    TargetKind,
    TargetSpec,
    VarianceBreak,
)
from app.domain.exceptions import ConfigurationError, UndefinedRatioError
from app.domain.metrics import (
    local_bandwidth,
    local_msfe,
    msfe_by_start_date,
    rl_msfe,
    rolling_window_bandwidth,
    subperiod_table,
)
from app.domain.panel import assemble_design, standardize, transform_panel
from app.domain.ports import ArtifactStore, PanelSource, TaskRunner
from app.domain.tune import BandwidthGrid, CvMode, CvSpec, choose_bandwidth, cv_bandwidth_loo, cv_bandwidth_oos

logger = logging.getLogger(__name__)

MANIFEST = "manifest.json"
FLOAT_FORMAT = "%.10g"


# ── Helpers ──────────────────────────────────────────────────────────


def describe_boost(config: BoostConfig) -> dict:
    return {
        "nu": config.nu,
        "max_iter": config.max_iter,
        "stopping": config.stopping.value,
        "learner": config.learner.value,
        "loss": config.loss.name,
        "kernel": config.kernel.family.value,
        "hat_trace_cap": config.hat_trace_cap,
        "cv_holdout": config.cv_holdout,
    }


def describe_settings(settings: SuiteSettings) -> dict:
    return {
        "lags": settings.lags,
        "ar_order": settings.ar_order,
        "rolling_fraction": settings.rolling_fraction,
        "rolling_length": settings.rolling_length,
        "cv_window": settings.cv_window,
        "grid": list(settings.grid.values),
        "lc_kernel": settings.lc_family.value,
        "ll_kernel": settings.ll_family.value,
        "factor_count": settings.factor_count,
        "factor_lags": settings.factor_lags,
        "di_factor_count": settings.di_factor_count,
        "di_factor_lags": settings.di_factor_lags,
        "fixed_bandwidth": settings.fixed_bandwidth,
        "boost": describe_boost(settings.boost),
    }


def write_manifest(
    store: ArtifactStore,
    command: str,
    config: dict,
    outputs: Sequence[str],
    name: str = MANIFEST,
) -> str:
    """Sorted-key JSON without timestamps so reruns are byte-identical."""
    payload = {
        "command": command,
        "version": __version__,
        "config": config,
        "outputs": sorted(outputs),
    }
    return store.save_text(name, json.dumps(payload, sort_keys=True, indent=2, default=str) + "\n")


def _frame_text(frame: pd.DataFrame, index: bool = False) -> str:
    return frame.to_csv(index=index, float_format=FLOAT_FORMAT, lineterminator="\n")


def _slug(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", text).strip("_")


# ── DTOs ─────────────────────────────────────────────────────────────


@dataclass
class SimulationResult:
    table: pd.DataFrame
    table_path: str
    manifest_path: str
    excluded: dict[int, int] = field(default_factory=dict)


@dataclass
class ForecastRunResult:
    log: ForecastLog
    log_path: str
    manifest_path: str


@dataclass
class CrossValidationResult:
    bandwidth: float
    scores: pd.DataFrame
    scores_path: str
    manifest_path: str


@dataclass
class ReportResult:
    metric: str
    tables: dict[str, pd.DataFrame]
    paths: list[str]
    manifest_path: str


@dataclass
class TransformResult:
    panel: Panel
    panel_path: str
    manifest_path: str


# ── Use Cases ────────────────────────────────────────────────────────


class SimulateUseCase:
    """Monte Carlo table: one row per DGP, one column per method (relative MSFE)."""

    def __init__(self, store: ArtifactStore, runner: TaskRunner, manifest: str = MANIFEST):
        self.store = store
        self.manifest = manifest
        self.runner = runner

    def execute(
        self,
        dgp_ids: Sequence[int],
        methods: Sequence[str],
        settings: SuiteSettings,
        reps: int,
        seed: int,
        innovation: Innovation = Innovation.GAUSSIAN,
        T: int = 200,
        d: int = 100,
        variance_break: VarianceBreak = VarianceBreak.VARIANCE,
        out: str = "sim_table.csv",
    ) -> SimulationResult:
        build_suite(methods, settings)
        rows, excluded = [], {}
        for dgp_id in dgp_ids:
            spec = DgpSpec(
                dgp_id=dgp_id,
                innovation=innovation,
                T=T,
                d=d,
                seed=seed,
                variance_break=variance_break,
            )
            logger.info("DGP %d: %d replications, %s innovations", dgp_id, reps, spec.innovation.value)
            result = monte_carlo(spec, methods, reps, self.runner, settings)
            excluded[dgp_id] = len(result.excluded)
            rows.append({"dgp": dgp_id, **result.relative_table(), "retained": result.retained})

        labels = [m.split("=", 1)[0] for m in methods]
        table = pd.DataFrame(rows, columns=["dgp", *labels, "retained"])
        table_path = self.store.save_text(out, _frame_text(table))
        logger.info("Wrote %s", table_path)
        manifest_path = write_manifest(
            self.store,
            "sim",
            {
                "dgps": list(dgp_ids),
                "methods": list(methods),
                "reps": reps,
                "seed": seed,
                "innovation": Innovation(innovation).value,
                "T": T,
                "d": d,
                "variance_break": VarianceBreak(variance_break).value,
                "excluded": {str(k): v for k, v in excluded.items()},
                "settings": describe_settings(settings),
            },
            [out],
            name=self.manifest,
        )
        return SimulationResult(table=table, table_path=table_path, manifest_path=manifest_path, excluded=excluded)


class ForecastUseCase:
    """Expanding-window forecasts of every target/horizon pair into one log."""

    def __init__(self, panel_source: PanelSource, store: ArtifactStore, runner: TaskRunner, manifest: str = MANIFEST):
        self.panel_source = panel_source
        self.store = store
        self.manifest = manifest
        self.runner = runner

    def execute(
        self,
        data: str,
        targets: Mapping[str, TargetKind],
        horizons: Sequence[int],
        methods: Sequence[str],
        settings: SuiteSettings,
        oos_start: Optional[str] = None,
        oos_end: Optional[str] = None,
        initial_window: int = 120,
        benchmark: str = "ar",
        remap: Optional[dict[str, int]] = None,
        out: str = "forecast_log.csv",
    ) -> ForecastRunResult:
        suite = build_suite(methods, settings)
        if benchmark not in suite:
            raise ConfigurationError(f"Benchmark {benchmark!r} is not among the methods {list(suite)}")
        panel = self.panel_source.load(data, remap)
        for name in targets:
            panel.index_of(name)

        specs = [
            TargetSpec(series=name, horizon=h, kind=kind)
            for name, kind in targets.items()
            for h in horizons
        ]
        log = run_expanding(
            panel,
            specs,
            suite,
            self.runner,
            oos_start=oos_start,
            oos_end=oos_end,
            initial_window=initial_window,
            benchmark=benchmark,
        )
        log_path = self.store.save_text(out, _frame_text(log.to_frame()))
        logger.info("Wrote %d forecast records to %s", len(log), log_path)
        manifest_path = write_manifest(
            self.store,
            "forecast",
            {
                "data": data,
                "targets": {name: TargetKind(kind).value for name, kind in targets.items()},
                "horizons": list(horizons),
                "methods": list(methods),
                "benchmark": benchmark,
                "oos_start": oos_start,
                "oos_end": oos_end,
                "initial_window": initial_window,
                "remap": remap or {},
                "settings": describe_settings(settings),
            },
            [out],
            name=self.manifest,
        )
        return ForecastRunResult(log=log, log_path=log_path, manifest_path=manifest_path)


@dataclass(frozen=True)
class BandwidthTask:
    """One grid point of a cross-validation run."""

    design: object
    bandwidth: float
    spec: CvSpec
    config: BoostConfig
    t0: Optional[int] = None


def score_bandwidth(task: BandwidthTask) -> float:
    grid = BandwidthGrid((task.bandwidth,))
    if task.spec.mode is CvMode.OOS:
        choice = cv_bandwidth_oos(task.design, grid, task.spec, task.config)
    else:
        choice = cv_bandwidth_loo(task.design, grid, task.t0, task.config, task.spec)
    return choice.scores[task.bandwidth]


class CrossValidateUseCase:
    """Bandwidth CV for one target on a panel; grid points run on the task runner."""

    def __init__(self, panel_source: PanelSource, store: ArtifactStore, runner: TaskRunner, manifest: str = MANIFEST):
        self.panel_source = panel_source
        self.store = store
        self.manifest = manifest
        self.runner = runner

    def execute(
        self,
        data: str,
        target: TargetSpec,
        config: BoostConfig,
        grid: BandwidthGrid,
        spec: CvSpec,
        lags: int = 3,
        t0: Optional[int] = None,
        remap: Optional[dict[str, int]] = None,
        out: str = "cv_scores.csv",
    ) -> CrossValidationResult:
        config.validate()
        panel = self.panel_source.load(data, remap)
        design = assemble_design(panel, target, lags)
        if spec.mode is CvMode.WEIGHTED_LOO:
            design, _ = standardize(design)
            t0 = design.n - 1 if t0 is None else t0
            if not 0 <= t0 < design.n:
                raise ConfigurationError(f"--t0 must lie in 0..{design.n - 1}, got {t0}")

        tasks = [BandwidthTask(design=design, bandwidth=b, spec=spec, config=config, t0=t0) for b in grid]
        scores = dict(zip(grid.values, self.runner.map(score_bandwidth, tasks)))
        chosen = choose_bandwidth(scores)
        logger.info("CV (%s) on %d rows chose b=%.3f", spec.mode.value, design.n, chosen)

        frame = pd.DataFrame(
            {
                "bandwidth": list(scores),
                "score": list(scores.values()),
                "chosen": [b == chosen for b in scores],
            }
        )
        scores_path = self.store.save_text(out, _frame_text(frame))
        manifest_path = write_manifest(
            self.store,
            "cv",
            {
                "data": data,
                "target": target.series,
                "horizon": target.horizon,
                "kind": target.kind.value,
                "lags": lags,
                "mode": spec.mode.value,
                "window": spec.window,
                "local": spec.local,
                "t0": t0,
                "grid": list(grid.values),
                "boost": describe_boost(config),
                "remap": remap or {},
            },
            [out],
            name=self.manifest,
        )
        return CrossValidationResult(bandwidth=chosen, scores=frame, scores_path=scores_path, manifest_path=manifest_path)


class ReportUseCase:
    """Evaluation metrics from a forecast log."""

    METRICS = ("relmsfe", "bystart", "local", "lbw")

    def __init__(self, store: ArtifactStore, manifest: str = MANIFEST):
        self.store = store
        self.manifest = manifest

    def execute(
        self,
        log: ForecastLog,
        metric: str,
        windows: Sequence[str] = ("full",),
        methods: Optional[Sequence[str]] = None,
        delta: int = 70,
        versus: Optional[str] = None,
        rolling_length: int = 120,
        source: str = "",
    ) -> ReportResult:
        if metric not in self.METRICS:
            raise ConfigurationError(f"Unknown metric {metric!r}; choose from {', '.join(self.METRICS)}")
        if len(log) == 0:
            raise ConfigurationError("Forecast log is empty")
        if log.benchmark not in log.methods:
            raise ConfigurationError(f"Benchmark {log.benchmark!r} has no records in the log")
        methods = list(methods or log.methods)
        for method in [*methods, *([versus] if versus else [])]:
            if method not in log.methods:
                raise ConfigurationError(f"Method {method!r} has no records in the log")
        if "all" in windows:
            windows = ("full", *SUBPERIODS)
        parsed = [EvalWindow.parse(w) for w in windows]

        if metric == "relmsfe":
            tables = self._relmsfe(log, parsed, methods)
        else:
            # series metrics use the first window only
            tables = {
                f"{metric}_{target}_h{h}": self._series_table(
                    log, metric, methods, target, h, parsed[0], delta, versus, rolling_length
                )
                for target in log.targets
                for h in log.horizons
            }

        names = []
        for label, table in tables.items():
            name = f"{_slug(label)}.csv"
            self.store.save_text(name, _frame_text(table, index=True))
            names.append(name)
        paths = [self.store.path_of(n) for n in names]
        for path in paths:
            logger.info("Wrote %s", path)
        manifest_path = write_manifest(
            self.store,
            "report",
            {
                "log": source,
                "metric": metric,
                "windows": [w.label for w in parsed],
                "methods": methods,
                "benchmark": log.benchmark,
                "delta": delta,
                "versus": versus,
                "rolling_length": rolling_length,
            },
            names,
            name=self.manifest,
        )
        return ReportResult(metric=metric, tables=tables, paths=paths, manifest_path=manifest_path)

    @staticmethod
    def _relmsfe(log: ForecastLog, windows: list[EvalWindow], methods: list[str]) -> dict[str, pd.DataFrame]:
        tables = {}
        for h in log.horizons:
            for label, table in subperiod_table(log, windows, h, methods).items():
                tables[f"relmsfe_{label}_h{h}"] = table
        return tables

    @staticmethod
    def _series_table(
        log: ForecastLog,
        metric: str,
        methods: list[str],
        target: str,
        horizon: int,
        window: EvalWindow,
        delta: int,
        versus: Optional[str],
        rolling_length: int,
    ) -> pd.DataFrame:
        """Dates down the rows, one column per method."""
        columns = {}
        for method in methods:
            try:
                if metric == "bystart":
                    columns[method] = msfe_by_start_date(log, method, window.end, target, horizon)
                elif metric == "local" and versus is not None and method != versus:
                    columns[method] = rl_msfe(log, method, versus, delta, target, horizon)
                elif metric == "local":
                    columns[method] = local_msfe(log, method, delta, target, horizon)
                else:
                    columns[method] = local_bandwidth(log, method, delta, target, horizon)
                    sizes = log.sample_sizes(method, target, horizon).dropna()
                    if not sizes.empty and log.bandwidths(method, target, horizon).notna().any():
                        columns[f"{method}:rolling"] = rolling_window_bandwidth(sizes, rolling_length)
            except UndefinedRatioError as exc:
                logger.warning("Skipping %s for %s h=%d: %s", method, target, horizon, exc)
        frame = pd.DataFrame(columns).sort_index()
        if len(frame):
            frame = frame[window.mask(frame.index)]
        frame.index = frame.index.astype(str)
        frame.index.name = "date"
        return frame


class TransformUseCase:
    """Writes the stationary (transformed) panel in the layout the source reads."""

    def __init__(self, panel_source: PanelSource, store: ArtifactStore, manifest: str = MANIFEST):
        self.panel_source = panel_source
        self.store = store
        self.manifest = manifest

    def execute(self, data: str, remap: Optional[dict[str, int]] = None, out: str = "transformed.csv") -> TransformResult:
        transformed = transform_panel(self.panel_source.load(data, remap))
        panel_path = self.store.save_text(out, self.panel_source.render(transformed))
        logger.info("Wrote %d transformed series to %s", transformed.n_series, panel_path)
        manifest_path = write_manifest(
            self.store, "transform", {"data": data, "remap": remap or {}}, [out], name=self.manifest
        )
        return TransformResult(panel=transformed, panel_path=panel_path, manifest_path=manifest_path)
