"""Chunked thread-pool execution for replica-parallel estimators.

Replicas are split into fixed-size chunks (independent of the thread count)
and each chunk is processed by a nogil kernel on a worker thread.  Chunk
outputs land in per-chunk or per-replica slots and are reduced in chunk
order afterwards, so the result is byte-identical for any number of threads.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

CHUNK = 20_000


def resolve_threads(threads: int | None) -> int:
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get("AVGMIX_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def chunk_ranges(total: int, chunk: int = CHUNK) -> list[tuple[int, int]]:
    return [(lo, min(lo + chunk, total)) for lo in range(0, total, chunk)]


def run_chunks(fn, total: int, threads: int | None, chunk: int = CHUNK) -> list:
    """Apply ``fn(lo, hi)`` over chunk ranges; results in chunk order."""
    ranges = chunk_ranges(total, chunk)
    nthreads = resolve_threads(threads)
    if nthreads <= 1 or len(ranges) <= 1:
        return [fn(lo, hi) for lo, hi in ranges]
    with ThreadPoolExecutor(max_workers=nthreads) as pool:
        return list(pool.map(lambda r: fn(*r), ranges))
