"""Monte Carlo harness: simulate, forecast the last observation, compare methods."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from app.application.methods import SIMULATION, SuiteSettings, build_suite
from app.domain.entities import DgpSpec, ForecastProblem, McResult, TargetKind, TargetSpec
from app.domain.exceptions import ConfigurationError, DomainError
from app.domain.ports import TaskRunner
from app.domain.simlab import replication_rng, simulate, simulation_panel

logger = logging.getLogger(__name__)

DENOMINATOR = "boost"
EXCLUSION_WARN_SHARE = 0.01


@dataclass(frozen=True)
class ReplicationTask:
    spec: DgpSpec
    rep: int
    methods: tuple[str, ...]
    settings: SuiteSettings


@dataclass(frozen=True)
class ReplicationOutcome:
    rep: int
    squared_errors: dict = field(default_factory=dict)
    bandwidths: dict = field(default_factory=dict)
    error: Optional[str] = None

    @property
    def failed(self) -> bool:
        return self.error is not None


def replication_problem(spec: DgpSpec, rep: int) -> tuple[ForecastProblem, float]:
    """Simulated panel through T-1 and the held-out Y_T."""
    Y, Z = simulate(spec, replication_rng(spec.seed, rep))
    panel = simulation_panel(Y, Z)
    problem = ForecastProblem(
        panel=panel.truncate(panel.dates[-2]),
        target=TargetSpec(series="y", horizon=1, kind=TargetKind.LEVEL),
        forecast_date=panel.last_date,
    )
    return problem, float(Y[-1])


def run_replication(task: ReplicationTask) -> ReplicationOutcome:
    """One replication; module-level so process pools can pickle it."""
    problem, actual = replication_problem(task.spec, task.rep)
    suite = build_suite(task.methods, task.settings)
    squared, bandwidths = {}, {}
    for name, method in suite.items():
        try:
            result = method.forecast(problem)
        except (DomainError, np.linalg.LinAlgError, ValueError) as exc:
            logger.warning("Replication %d: method %s failed: %s", task.rep, name, exc)
            return ReplicationOutcome(rep=task.rep, error=f"{name}: {exc}")
        squared[name] = (actual - result.prediction) ** 2
        if result.bandwidth is not None:
            bandwidths[name] = result.bandwidth
    return ReplicationOutcome(rep=task.rep, squared_errors=squared, bandwidths=bandwidths)


def monte_carlo(
    spec: DgpSpec,
    methods: Sequence[str],
    reps: int,
    runner: TaskRunner,
    settings: SuiteSettings = SIMULATION,
) -> McResult:
    """Relative MSFE of ``methods`` over ``reps`` replications seeded from ``spec.seed``.

    A replication where any method fails is dropped for every method.
    """
    if reps < 1:
        raise ConfigurationError("reps must be >= 1")
    methods = tuple(methods)
    if DENOMINATOR not in methods:
        raise ConfigurationError(f"Method list must include the {DENOMINATOR!r} denominator")

    tasks = [ReplicationTask(spec=spec, rep=rep, methods=methods, settings=settings) for rep in range(reps)]
    outcomes = sorted(runner.map(run_replication, tasks), key=lambda o: o.rep)
    excluded = tuple(o.rep for o in outcomes if o.failed)
    if excluded:
        logger.warning("DGP %d: excluded %d of %d replications", spec.dgp_id, len(excluded), reps)
        if len(excluded) > EXCLUSION_WARN_SHARE * reps:
            logger.warning(
                "DGP %d: exclusions exceed %.0f%% of replications", spec.dgp_id, 100 * EXCLUSION_WARN_SHARE
            )
    retained = [o for o in outcomes if not o.failed]
    if not retained:
        raise ConfigurationError(f"DGP {spec.dgp_id}: every replication failed")

    labels = tuple(retained[0].squared_errors)
    return McResult(
        dgp_id=spec.dgp_id,
        innovation=spec.innovation,
        methods=labels,
        squared_errors={m: np.array([o.squared_errors[m] for o in retained]) for m in labels},
        replications=reps,
        excluded=excluded,
        master_seed=spec.seed,
        denominator=DENOMINATOR,
        bandwidths={
            m: np.array([o.bandwidths[m] for o in retained if m in o.bandwidths]) for m in labels
        },
    )
