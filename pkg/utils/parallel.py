"""
Process pool helpers for SourceChecker.

Verification samples are independent of each other, so they are spread over
separate processes; results always come back in input order.
"""

import multiprocessing as mp
from typing import Callable, Iterable, List, Optional

import psutil


def available_workers() -> int:
    """Logical core count, at least 1."""
    return max(1, psutil.cpu_count(logical=True) or 1)


def resolve_workers(workers: Optional[int]) -> int:
    """0 or None means one worker per logical core."""
    if not workers:
        return available_workers()
    return max(1, min(int(workers), available_workers()))


def memory_usage_mb() -> float:
    """Resident memory of the current process in MB."""
    return psutil.Process().memory_info().rss / (1024.0 * 1024.0)


def parallel_map(func: Callable, items: Iterable, workers: Optional[int] = 1) -> List:
    """map(func, items) on a process pool; workers=1 runs inline.

    func must be picklable (module-level function or functools.partial of one).
    """
    items = list(items)
    count = min(resolve_workers(workers), len(items))
    if count <= 1:
        return [func(item) for item in items]
    # spawn for identical behaviour on every platform
    mp_ctx = mp.get_context("spawn")
    with mp_ctx.Pool(processes=count) as pool:
        return pool.map(func, items)
