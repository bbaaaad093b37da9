"""Deterministic thread-pool helpers.

Work is split into items whose results are returned in input order, so any
reduction done by the caller is independent of the worker count.
"""
import os
from concurrent.futures import ThreadPoolExecutor

ENV_VAR = "PROJCAP_THREADS"


def thread_count():
    raw = os.environ.get(ENV_VAR)
    if raw is None or raw.strip() == "":
        return min(4, os.cpu_count() or 1)
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"{ENV_VAR} must be a positive integer, got {raw!r}")
    if value < 1:
        raise ValueError(f"{ENV_VAR} must be a positive integer, got {raw!r}")
    return value


def ordered_map(fn, items):
    """Apply ``fn`` to every item, possibly concurrently; results keep input order."""
    items = list(items)
    workers = min(thread_count(), len(items))
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
