"""Ordered fan-out of independent evaluations."""

import os
from concurrent.futures import ThreadPoolExecutor


def workers():
    """Worker cap from ``OPSYS_THREADS`` (default 1, i.e. serial)."""
    try:
        return max(1, int(os.environ.get("OPSYS_THREADS", "1")))
    except ValueError:
        return 1


def ordered_map(fn, items):
    """``[fn(x) for x in items]``, possibly on a thread pool; order is preserved."""
    items = list(items)
    n = min(workers(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
