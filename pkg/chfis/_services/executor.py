from __future__ import annotations

import logging
from collections.abc import Callable, Iterable
from concurrent.futures import ThreadPoolExecutor
from functools import partial
from typing import final

__all__ = ["Executor"]

logger = logging.getLogger(__name__)


@final
class Executor:
    """
    Runs independent jobs and hands their results back in submission order.\n
    With a single worker the jobs run inline, in order, on the calling thread.
    """

    def __init__(self, workers: int = 1, /) -> None:
        if workers < 1:
            raise ValueError(f"workers must be at least 1, got {workers}")

        self._workers = workers

    @property
    def workers(self) -> int:
        """How many jobs may run at once."""

        return self._workers

    @property
    def is_inline(self) -> bool:
        return self._workers == 1

    def run[T](self, jobs: Iterable[Callable[[], T]], /) -> list[T]:
        """
        Runs every job.

        Parameters
        ----------
        jobs: `Iterable[Callable[[], T]]`
            Zero-argument callables. They must not depend on each other.

        Returns
        -------
        `list[T]`
            The job results, in the order the jobs were given.

        Raises
        ------
        `Exception`
            The first exception raised by a job, in submission order.
        """

        jobs = list(jobs)

        if self.is_inline or len(jobs) < 2:
            return [job() for job in jobs]

        logger.debug("Running %d jobs on %d threads.", len(jobs), self._workers)

        with ThreadPoolExecutor(max_workers=self._workers) as pool:
            futures = [pool.submit(job) for job in jobs]
            return [future.result() for future in futures]

    def map[T, R](self, func: Callable[[T], R], items: Iterable[T], /) -> list[R]:
        """Applies `func` to every item. See `run`."""

        return self.run([partial(func, item) for item in items])
