"""Worker-count plumbing for data-parallel sample loops.

Results are always collected in submission order and every task derives its
own RNG substream, so serial and parallel runs agree bit-exactly.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

_WORKERS = 1


def set_workers(count: int) -> None:
    global _WORKERS
    if count < 1:
        raise ValueError(f"worker count must be positive, got {count}")
    _WORKERS = int(count)


def get_workers() -> int:
    return _WORKERS


def ordered_map(fn, items) -> list:
    """Map preserving input order, threaded when the worker cap allows."""
    items = list(items)
    if _WORKERS == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=_WORKERS) as pool:
        return list(pool.map(fn, items))
