from __future__ import annotations

import abc
from typing import Callable, Iterable, Optional, TypeVar

from app.domain.entities import ForecastLog, ForecastProblem, MethodForecast, Panel

T = TypeVar("T")
R = TypeVar("R")


class PanelSource(abc.ABC):
    @abc.abstractmethod
    def load(self, path: str, remap: Optional[dict[str, int]] = None) -> Panel:
        """Read a panel; ``remap`` overrides per-series transform codes."""
        ...

    @abc.abstractmethod
    def render(self, panel: Panel) -> str:
        """Text of ``panel`` in the layout ``load`` reads."""
        ...

    @abc.abstractmethod
    def load_log(self, path: str, benchmark: str = "ar") -> ForecastLog:
        ...


class ArtifactStore(abc.ABC):
    """Output directory for logs, tables and the run manifest."""

    @abc.abstractmethod
    def save_text(self, name: str, text: str) -> str:
        """Write ``text`` and return the stored path."""
        ...

    @abc.abstractmethod
    def read_text(self, name: str) -> str:
        ...

    @abc.abstractmethod
    def exists(self, name: str) -> bool:
        ...

    @abc.abstractmethod
    def path_of(self, name: str) -> str:
        ...


class TaskRunner(abc.ABC):
    """Runs independent tasks; results come back in input order."""

    @abc.abstractmethod
    def map(self, fn: Callable[[T], R], items: Iterable[T]) -> list[R]:
        ...


class Forecaster(abc.ABC):
    """One forecasting method of the comparison suite."""

    name: str

    @abc.abstractmethod
    def forecast(self, problem: ForecastProblem) -> MethodForecast:
        """Point forecast of ``problem.target`` at ``problem.forecast_date``."""
        ...
