from __future__ import annotations

import logging
from typing import Callable, Iterable, List, TypeVar

from joblib import Parallel, delayed

from .config import get_settings

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


class WorkerPool:
    """Ordered map over independent jobs.

    Results always come back in submission order, so callers that merge them
    get the same output for any worker count.
    """

    def __init__(self, workers: int = 1, backend: str = "loky") -> None:
        self.workers = workers
        self.backend = backend

    @property
    def parallel(self) -> bool:
        return self.workers > 1

    def map(self, func: Callable[..., R], items: Iterable[T], *args) -> List[R]:
        jobs = list(items)
        if not self.parallel or len(jobs) < 2:
            return [func(item, *args) for item in jobs]
        logger.debug("Dispatching jobs", extra={"jobs": len(jobs), "workers": self.workers, "backend": self.backend})
        return Parallel(n_jobs=self.workers, backend=self.backend)(delayed(func)(item, *args) for item in jobs)


def get_pool(workers: int | None = None) -> WorkerPool:
    settings = get_settings()
    return WorkerPool(workers or settings.workers, settings.backend)
