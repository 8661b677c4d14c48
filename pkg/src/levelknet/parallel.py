"""Seed splitting and an optional process pool for Monte-Carlo batches.

Every task gets its own child of one ``SeedSequence``, so results do not
depend on the number of workers.
"""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable

import numpy as np

__all__ = ["child_seeds", "rng_for", "pmap", "default_jobs"]


def default_jobs() -> int:
    return os.cpu_count() or 1


def child_seeds(seed: int, count: int, stream: int = 0) -> list[np.random.SeedSequence]:
    """``count`` independent seed sequences for stream ``stream`` of ``seed``."""
    return np.random.SeedSequence([seed, stream]).spawn(count)


def rng_for(seq: np.random.SeedSequence) -> np.random.Generator:
    return np.random.default_rng(seq)


def pmap(fn: Callable, items: Iterable, jobs: int = 1, chunksize: int = 16) -> list:
    """``list(map(fn, items))``, across ``jobs`` processes when ``jobs > 1``."""
    items = list(items)
    if jobs <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items, chunksize=chunksize))
