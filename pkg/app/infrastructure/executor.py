from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, TypeVar

from app.domain.ports import TaskRunner

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


class SequentialRunner(TaskRunner):
    def map(self, fn: Callable[[T], R], items: Iterable[T]) -> list[R]:
        return [fn(item) for item in items]


class ProcessPoolRunner(TaskRunner):
    """Runs tasks in worker processes; ``fn`` must be a module-level function."""

    def __init__(self, jobs: int, chunksize: int = 1):
        if jobs < 1:
            raise ValueError("jobs must be >= 1")
        self.jobs = jobs
        self.chunksize = chunksize

    def map(self, fn: Callable[[T], R], items: Iterable[T]) -> list[R]:
        items = list(items)
        logger.debug("Dispatching %d tasks to %d workers", len(items), self.jobs)
        with ProcessPoolExecutor(max_workers=self.jobs) as executor:
            return list(executor.map(fn, items, chunksize=self.chunksize))
