"""Split integer ranges into shards and map a worker over them.

Results always come back in shard order so merges are deterministic no
matter how many processes ran them.
"""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np


def default_shards() -> int:
    return max(1, len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else os.cpu_count() or 1)


def odd_values(lo: int, hi: int) -> np.ndarray:
    """Odd integers in ``[lo, hi]`` as int64."""
    first = lo | 1
    if first > hi:
        return np.empty(0, np.int64)
    return np.arange(first, hi + 1, 2, dtype=np.int64)


def split(values, shards: int):
    """Cut a sequence into ``shards`` contiguous pieces (some may be empty)."""
    if shards < 1:
        raise ValueError("shard count must be >= 1")
    n = len(values)
    edges = [n * i // shards for i in range(shards + 1)]
    return [values[edges[i]:edges[i + 1]] for i in range(shards)]


def map_shards(func, pieces, workers=None):
    """``[func(p) for p in pieces]``, in a process pool when it can help."""
    pieces = list(pieces)
    workers = min(len(pieces), workers or default_shards())
    if workers <= 1 or len(pieces) <= 1:
        return [func(p) for p in pieces]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, pieces))
