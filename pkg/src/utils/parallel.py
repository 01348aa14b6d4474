"""
Order-preserving process-pool map and sum used by the data-parallel stages.
"""

from concurrent.futures import ProcessPoolExecutor, as_completed
from typing import Callable, List, Optional, Sequence, TypeVar

import numpy as np

from .config import get_config
from .logger import get_logger

T = TypeVar("T")
R = TypeVar("R")

logger = get_logger(__name__)


def resolve_jobs(jobs: Optional[int]) -> int:
    """Worker count: explicit value, else the configured maximum."""
    if jobs is None:
        jobs = get_config().performance.max_workers
    if jobs < 1:
        raise ValueError(f"jobs must be >= 1, got {jobs}")
    return jobs


def parallel_map(
    func: Callable[[T], R],
    items: Sequence[T],
    jobs: Optional[int] = 1,
    chunk_size: Optional[int] = None,
) -> List[R]:
    """Apply ``func`` to every item and return the results in input order.

    ``func`` must be a picklable module-level callable when ``jobs > 1``.
    With one job (or at most one item) everything runs in-process.
    """
    jobs = resolve_jobs(jobs)
    items = list(items)
    if jobs == 1 or len(items) <= 1:
        return [func(item) for item in items]

    if chunk_size is None:
        chunk_size = max(1, min(get_config().performance.chunk_size, len(items) // jobs or 1))

    logger.debug("Dispatching to process pool", jobs=jobs, items=len(items), chunk_size=chunk_size)
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(func, items, chunksize=chunk_size))


def parallel_sum(
    func: Callable[[T], np.ndarray],
    items: Sequence[T],
    jobs: Optional[int] = 1,
    deterministic: Optional[bool] = None,
) -> np.ndarray:
    """Sum of ``func`` over the items, each result stacked along axis 0.

    The deterministic reduction concatenates the results in input order and
    sums them once, so the value is bit-identical for any worker count.
    Otherwise partial sums are accumulated as workers finish.
    """
    items = list(items)
    if not items:
        raise ValueError("parallel_sum needs at least one item")
    if deterministic is None:
        deterministic = get_config().performance.deterministic
    jobs = resolve_jobs(jobs)
    if deterministic or jobs == 1 or len(items) == 1:
        results = parallel_map(func, items, jobs)
        return np.sum(np.concatenate(results, axis=0), axis=0)

    total = None
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(func, item) for item in items]
        for future in as_completed(futures):
            partial = np.sum(future.result(), axis=0)
            total = partial if total is None else total + partial
    return total
