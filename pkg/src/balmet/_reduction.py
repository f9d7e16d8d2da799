"""Deterministic reductions and the worker-count policy.

Summation uses a fixed pairwise tree so results are bit-identical no matter
how many workers evaluate the integrand chunks.  BALMET_THREADS bounds the
size of the evaluation pool; it never changes the combination order.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

_CHUNK = 4096


def worker_count() -> int:
    """Worker bound from BALMET_THREADS (default 1, clamped to [1, 64])."""
    raw = os.environ.get("BALMET_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        n = 1
    return max(1, min(n, 64))


def pairwise_sum(a: np.ndarray, axis: int = 0):
    """Sum along `axis` with a fixed binary combination tree.

    Equivalent to a.sum(axis) up to rounding, but the evaluation order is a
    deterministic function of the length alone.
    """
    a = np.moveaxis(np.asarray(a), axis, 0)
    while a.shape[0] > 1:
        n = a.shape[0]
        if n % 2:
            tail = a[-1]
            a = a[:-1]
        else:
            tail = None
        a = a[0::2] + a[1::2]
        if tail is not None:
            a = np.concatenate([a, tail[None]], axis=0)
    return a[0]


def chunked_map_sum(fn, n_items: int):
    """Apply fn(start, stop) over fixed-size chunks and pairwise-sum the results.

    The chunk boundaries and the combination tree depend only on n_items, so
    the result is identical whether chunks are evaluated serially or by a
    thread pool.
    """
    bounds = [(s, min(s + _CHUNK, n_items)) for s in range(0, n_items, _CHUNK)]
    workers = worker_count()
    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda se: fn(*se), bounds))
    else:
        parts = [fn(s, e) for s, e in bounds]
    return pairwise_sum(np.stack(parts, axis=0), axis=0)
