"""Argument parsing for the ``tvboost`` command line."""

from __future__ import annotations

import argparse
from typing import Optional

from app import __version__
from app.application.methods import MACRO_METHODS, SIMULATION_METHODS
from app.domain.boost import LearnerKind, Stopping
from app.domain.entities import Innovation, TargetKind, TransformCode, VarianceBreak
from app.domain.kernel import KernelFamily
from app.domain.losses import parse_loss
from app.domain.tune import BandwidthGrid, CvMode

DGP_IDS = tuple(range(1, 15))
TARGET_KINDS = {
    "growth": TargetKind.LOG_GROWTH,
    "log-growth": TargetKind.LOG_GROWTH,
    "diff": TargetKind.LEVEL_DIFFERENCE,
    "level-difference": TargetKind.LEVEL_DIFFERENCE,
    "level": TargetKind.LEVEL,
}


class UsageError(Exception):
    pass


class CliParser(argparse.ArgumentParser):
    """Raises instead of exiting so ``main`` owns the exit code."""

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# ── Value types ──────────────────────────────────────────────────────


def int_list(text: str) -> tuple[int, ...]:
    try:
        values = tuple(int(p) for p in text.split(",") if p.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def name_list(text: str) -> tuple[str, ...]:
    values = tuple(p.strip() for p in text.split(",") if p.strip())
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def dgp_list(text: str) -> tuple[int, ...]:
    if text.strip() == "all":
        return DGP_IDS
    values = int_list(text)
    bad = [v for v in values if v not in DGP_IDS]
    if bad:
        raise argparse.ArgumentTypeError(f"DGP ids must lie in 1..14, got {bad}")
    return values


def target_kind(text: str) -> TargetKind:
    try:
        return TARGET_KINDS[text.strip()]
    except KeyError:
        raise argparse.ArgumentTypeError(f"unknown target kind {text!r}; choose from {', '.join(TARGET_KINDS)}")


def target_map(text: str) -> dict[str, TargetKind]:
    """``CPI,UNRATE:diff`` -> {"CPI": log-growth, "UNRATE": level-difference}."""
    targets = {}
    for item in name_list(text):
        name, _, kind = item.partition(":")
        targets[name] = target_kind(kind) if kind else TargetKind.LOG_GROWTH
    return targets


def remap(text: str) -> dict[str, int]:
    """``NAME=code,...`` transform-code overrides."""
    out = {}
    for item in name_list(text):
        name, sep, code = item.partition("=")
        if not sep:
            raise argparse.ArgumentTypeError(f"expected NAME=code, got {item!r}")
        try:
            out[name.strip()] = int(TransformCode(int(code)))
        except ValueError:
            raise argparse.ArgumentTypeError(f"transform code for {name} must be 1..7, got {code!r}")
    return out


def bandwidth(text: str) -> Optional[float]:
    """A fixed bandwidth in (0, 1], or ``cv`` for cross-validation."""
    if text.strip() == "cv":
        return None
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a bandwidth or 'cv', got {text!r}")
    if not 0 < value <= 1:
        raise argparse.ArgumentTypeError("bandwidth must lie in (0, 1]")
    return value


def grid(text: str) -> BandwidthGrid:
    try:
        return BandwidthGrid.parse(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e))


def loss(text: str) -> str:
    try:
        return parse_loss(text).name
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e))


def kernel(text: str) -> KernelFamily:
    try:
        return KernelFamily.parse(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e))


def positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


# ── Option groups ────────────────────────────────────────────────────


def _common_options() -> argparse.ArgumentParser:
    common = CliParser(add_help=False)
    group = common.add_argument_group("run options")
    group.add_argument("--config", metavar="FILE", help="key=value file; flags override its values")
    group.add_argument("--out-dir", metavar="DIR", help="output directory (default TVBOOST_OUTPUT_DIR)")
    group.add_argument("--jobs", type=positive_int, help="worker processes (default TVBOOST_JOBS)")
    group.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"], type=str.upper)
    group.add_argument("--manifest", default="manifest.json", metavar="NAME", help="manifest file name")
    return common


def _boost_options(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("boosting")
    group.add_argument("--nu", type=float, help="step length (default TVBOOST_NU)")
    group.add_argument("--max-iter", type=positive_int, help="iteration cap (default TVBOOST_MAX_ITER)")
    group.add_argument("--stop", choices=[s.value for s in Stopping], help="stopping rule (default aicc)")
    group.add_argument("--loss", type=loss, help="l2, l1, quantile:<tau> or huber:<delta>")
    group.add_argument("--kernel", type=kernel, help="uniform, epa or gauss for every boosting method")
    group.add_argument("--bandwidth", type=bandwidth, default=None, help="fixed bandwidth or 'cv' (default cv)")
    group.add_argument("--cv-window", type=positive_int, help="validation origins for out-of-sample CV")
    group.add_argument("--grid", type=grid, help="bandwidth grid start:stop:step or a list")
    group.add_argument("--lags", type=int, help="lags of every panel column")


def build_parser() -> CliParser:
    parser = CliParser(
        prog="tvboost",
        description="Kernel-weighted componentwise boosting for time-varying parameter forecasting.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=CliParser)
    sub.required = True
    common = _common_options()

    sim = sub.add_parser("sim", parents=[common], help="Monte Carlo relative-MSFE table")
    sim.add_argument("--dgp", type=dgp_list, default=(9,), help="DGP ids (comma list) or 'all'")
    sim.add_argument("--innov", type=Innovation.parse, default=Innovation.GAUSSIAN, help="gauss or t5")
    sim.add_argument("--reps", type=positive_int, default=300)
    sim.add_argument("--seed", type=int, help="master seed (default TVBOOST_MASTER_SEED)")
    sim.add_argument("--methods", type=name_list, default=SIMULATION_METHODS)
    sim.add_argument("--T", dest="T", type=positive_int, default=200, help="sample length")
    sim.add_argument("--d", dest="d", type=positive_int, default=100, help="exogenous series")
    sim.add_argument(
        "--variance-break",
        choices=[v.value for v in VarianceBreak],
        default=VarianceBreak.VARIANCE.value,
        help="read DGP 2's post-break 2.5 as a variance or a standard deviation",
    )
    sim.add_argument("--out", default="sim_table.csv")
    _boost_options(sim)

    forecast = sub.add_parser("forecast", parents=[common], help="expanding-window forecast log")
    forecast.add_argument("--data", required=True, help="FRED-MD layout CSV")
    forecast.add_argument("--targets", type=target_map, required=True, help="NAME[:growth|diff|level],...")
    forecast.add_argument("--horizons", type=int_list, default=(1,))
    forecast.add_argument("--methods", type=name_list, default=MACRO_METHODS)
    forecast.add_argument("--benchmark", default="ar")
    forecast.add_argument("--oos-start", help="first forecast date, YYYY-MM")
    forecast.add_argument("--oos-end", help="last forecast date, YYYY-MM")
    forecast.add_argument("--initial-window", type=positive_int, help="default TVBOOST_INITIAL_WINDOW")
    forecast.add_argument("--rolling-length", type=positive_int, help="rows of the rolling methods")
    forecast.add_argument("--remap", type=remap, help="NAME=code,... transform-code overrides")
    forecast.add_argument("--out", default="forecast_log.csv")
    _boost_options(forecast)

    cv = sub.add_parser("cv", parents=[common], help="bandwidth cross-validation scores")
    cv.add_argument("--data", required=True)
    cv.add_argument("--target", type=target_map, required=True, help="NAME[:growth|diff|level]")
    cv.add_argument("--horizon", type=positive_int, default=1)
    cv.add_argument("--mode", choices=[m.value for m in CvMode], default=CvMode.OOS.value)
    cv.add_argument("--learner", type=LearnerKind.parse, default=LearnerKind.LC, help="lc or ll")
    cv.add_argument("--t0", type=int, help="row the weighted leave-one-out criterion centers on")
    cv.add_argument("--global", dest="local", action="store_false", help="unweighted leave-one-out")
    cv.add_argument("--remap", type=remap)
    cv.add_argument("--out", default="cv_scores.csv")
    _boost_options(cv)

    report = sub.add_parser("report", parents=[common], help="evaluation metrics from a forecast log")
    report.add_argument("--log", required=True)
    report.add_argument("--metric", choices=["relmsfe", "bystart", "local", "lbw"], default="relmsfe")
    report.add_argument("--window", type=name_list, default=("full",), help="full, pre-gm, gm, post-gm, T1:T2 or all")
    report.add_argument("--methods", type=name_list)
    report.add_argument("--benchmark", default="ar")
    report.add_argument("--delta", type=positive_int, help="half-width of local windows (default TVBOOST_LOCAL_DELTA)")
    report.add_argument("--versus", help="report local MSFE relative to this method")
    report.add_argument("--rolling-length", type=positive_int, default=120)

    transform = sub.add_parser("transform", parents=[common], help="write the stationary panel")
    transform.add_argument("--data", required=True)
    transform.add_argument("--remap", type=remap)
    transform.add_argument("--out", default="transformed.csv")
    return parser
