"""
Parallel sweeps with deterministic merging.

Work items are mapped in input order, so reductions over the result list do
not depend on scheduling. Random streams for the items are spawned from one
seed with numpy's SeedSequence.
"""

import logging
import os
import pickle
from concurrent.futures import Executor, ProcessPoolExecutor, ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

import numpy as np

logger = logging.getLogger("ftl.parallel")

T = TypeVar("T")
R = TypeVar("R")


def resolve_jobs(jobs: Optional[int]) -> int:
    """Worker count; None or 0 means all cores."""
    if not jobs:
        return os.cpu_count() or 1
    return max(1, int(jobs))


def spawn_seeds(seed: int, count: int) -> List[np.random.SeedSequence]:
    return np.random.SeedSequence(seed).spawn(count)


def spawn_rngs(seed: int, count: int) -> List[np.random.Generator]:
    """Independent generators, one per work item."""
    return [np.random.default_rng(s) for s in spawn_seeds(seed, count)]


def _picklable(fn: Callable) -> bool:
    try:
        pickle.dumps(fn)
    except Exception:
        return False
    return True


def _executor(fn: Callable, workers: int) -> Executor:
    if _picklable(fn):
        return ProcessPoolExecutor(max_workers=workers)
    logger.debug("Callable is not picklable, using threads")
    return ThreadPoolExecutor(max_workers=workers)


def parallel_map(fn: Callable[[T], R], items: Iterable[T], jobs: Optional[int] = 1) -> List[R]:
    """
    Map fn over items, results in input order.

    Args:
        fn: Work function; module-level functions and functools.partial
            objects run in worker processes, anything else in threads
        items: Work items
        jobs: Worker count (1 runs serially, None or 0 uses every core)

    Returns:
        List of results in the order of items
    """
    work = list(items)
    workers = min(resolve_jobs(jobs), len(work))
    if workers <= 1:
        return [fn(item) for item in work]
    logger.debug(f"Mapping {len(work)} items on {workers} workers")
    with _executor(fn, workers) as pool:
        return list(pool.map(fn, work))
