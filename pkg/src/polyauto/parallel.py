"""Reproducible randomness and worker pools.

Random streams come from the counter-based Philox generator keyed by
``(seed, task)``, so a task draws the same numbers no matter which worker
runs it.  Work is split into chunks whose boundaries depend only on the data
size, and results are reassembled in chunk order.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, Sequence

import numpy as np

CHUNK = 4096


def rng_for(seed: int, task: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=[seed % 2**64, task % 2**64]))


def chunk_bounds(total: int, size: int = CHUNK) -> list[tuple[int, int]]:
    return [(i, min(i + size, total)) for i in range(0, total, size)]


def pmap(fn: Callable, tasks: Sequence, workers: int = 1) -> list:
    """``[fn(t) for t in tasks]``, optionally spread over processes."""
    tasks = list(tasks)
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as ex:
        return list(ex.map(fn, tasks))


def concat(parts: Iterable[np.ndarray], axis: int = 0) -> np.ndarray:
    parts = list(parts)
    return np.concatenate(parts, axis=axis) if parts else np.empty(0)
