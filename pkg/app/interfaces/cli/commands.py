"""Subcommand handlers: build use cases from the container and print a summary."""

from __future__ import annotations

import argparse
from typing import Optional

import pandas as pd

from app.application.methods import SuiteSettings
from app.application.use_cases import (
    CrossValidateUseCase,
    ForecastUseCase,
    ReportUseCase,
    SimulateUseCase,
    TransformUseCase,
)
from app.domain.boost import BoostConfig, LearnerKind
from app.domain.entities import TargetSpec
from app.domain.kernel import KernelSpec, Sidedness
from app.domain.tune import CvMode, CvSpec
from app.infrastructure.container import (
    get_artifact_store,
    get_boost_config,
    get_panel_source,
    get_suite_settings,
    get_task_runner,
)
from app.interfaces.cli.parsers import UsageError
from config import get_settings


def _boost_config(args: argparse.Namespace, **extra) -> BoostConfig:
    return get_boost_config(
        nu=args.nu,
        max_iter=args.max_iter,
        stopping=args.stop,
        loss=args.loss,
        **extra,
    )


def _suite(args: argparse.Namespace, preset: str) -> SuiteSettings:
    family = args.kernel
    return get_suite_settings(
        preset,
        boost=_boost_config(args),
        lags=args.lags,
        cv_window=args.cv_window,
        grid=args.grid,
        lc_family=family,
        ll_family=family,
        fixed_bandwidth=args.bandwidth,
        rolling_length=getattr(args, "rolling_length", None),
    )


def _print_frame(frame: pd.DataFrame, title: Optional[str] = None) -> None:
    if title:
        print(title)
    print(frame.to_string(float_format=lambda v: f"{v:.3f}"))


# ── Commands ─────────────────────────────────────────────────────────


def run_sim(args: argparse.Namespace) -> int:
    settings = get_settings()
    use_case = SimulateUseCase(get_artifact_store(args.out_dir), get_task_runner(args.jobs), args.manifest)
    result = use_case.execute(
        dgp_ids=args.dgp,
        methods=args.methods,
        settings=_suite(args, "simulation"),
        reps=args.reps,
        seed=args.seed if args.seed is not None else getattr(settings, "TVBOOST_MASTER_SEED", 0),
        innovation=args.innov,
        T=args.T,
        d=args.d,
        variance_break=args.variance_break,
        out=args.out,
    )
    _print_frame(result.table.set_index("dgp"), "Relative MSFE (denominator: boost)")
    print(f"Wrote {result.table_path}")
    return 0


def run_forecast(args: argparse.Namespace) -> int:
    settings = get_settings()
    use_case = ForecastUseCase(
        get_panel_source(), get_artifact_store(args.out_dir), get_task_runner(args.jobs), args.manifest
    )
    result = use_case.execute(
        data=args.data,
        targets=args.targets,
        horizons=args.horizons,
        methods=args.methods,
        settings=_suite(args, "macro"),
        oos_start=args.oos_start,
        oos_end=args.oos_end,
        initial_window=args.initial_window or getattr(settings, "TVBOOST_INITIAL_WINDOW", 120),
        benchmark=args.benchmark,
        remap=args.remap,
        out=args.out,
    )
    print(f"Wrote {len(result.log)} forecasts to {result.log_path}")
    return 0


def run_cv(args: argparse.Namespace) -> int:
    if len(args.target) != 1:
        raise UsageError("cv takes exactly one --target")
    (name, kind), = args.target.items()
    suite = _suite(args, "macro")
    family = args.kernel or (suite.ll_family if args.learner is LearnerKind.LL else suite.lc_family)
    mode = CvMode(args.mode)
    sided = Sidedness.ONE_SIDED_PAST if mode is CvMode.OOS else Sidedness.TWO_SIDED
    config = _boost_config(args, learner=args.learner, kernel=KernelSpec(family=family, sided=sided))
    use_case = CrossValidateUseCase(
        get_panel_source(), get_artifact_store(args.out_dir), get_task_runner(args.jobs), args.manifest
    )
    result = use_case.execute(
        data=args.data,
        target=TargetSpec(series=name, horizon=args.horizon, kind=kind),
        config=config,
        grid=suite.grid,
        spec=CvSpec(mode=mode, window=suite.cv_window, horizon=args.horizon, family=family, local=args.local),
        lags=suite.lags,
        t0=args.t0,
        remap=args.remap,
        out=args.out,
    )
    _print_frame(result.scores.set_index("bandwidth"))
    print(f"Chosen bandwidth: {result.bandwidth:g}")
    return 0


def run_report(args: argparse.Namespace) -> int:
    settings = get_settings()
    log = get_panel_source().load_log(args.log, args.benchmark)
    use_case = ReportUseCase(get_artifact_store(args.out_dir), args.manifest)
    result = use_case.execute(
        log=log,
        metric=args.metric,
        windows=args.window,
        methods=args.methods,
        delta=args.delta or getattr(settings, "TVBOOST_LOCAL_DELTA", 70),
        versus=args.versus,
        rolling_length=args.rolling_length,
        source=args.log,
    )
    for label, table in result.tables.items():
        if args.metric == "relmsfe":
            _print_frame(table, label)
        else:
            print(f"{label}: {len(table)} dates x {table.shape[1]} series")
    return 0


def run_transform(args: argparse.Namespace) -> int:
    use_case = TransformUseCase(get_panel_source(), get_artifact_store(args.out_dir), args.manifest)
    result = use_case.execute(data=args.data, remap=args.remap, out=args.out)
    print(f"Wrote {result.panel.n_series} transformed series to {result.panel_path}")
    return 0


COMMANDS = {
    "sim": run_sim,
    "forecast": run_forecast,
    "cv": run_cv,
    "report": run_report,
    "transform": run_transform,
}
