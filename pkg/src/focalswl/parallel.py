"""Process-pool helper; results are ordered, so parallelism never changes output.

Worker count resolution: explicit argument, else the FOCALSWL_WORKERS
environment variable, else 1.  Every parallel loop in the package derives
one independent seed per task up front, which keeps results bit-identical
for any worker count.
"""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor

ENV_WORKERS = "FOCALSWL_WORKERS"


def resolve_workers(workers=None) -> int:
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get(ENV_WORKERS, "")
    if env.strip():
        try:
            return max(1, int(env))
        except ValueError:
            return 1
    return 1


def parallel_map(fn, items, workers=None) -> list:
    """Map fn over items, preserving order; serial when one worker."""
    items = list(items)
    n_workers = resolve_workers(workers)
    if n_workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=n_workers) as pool:
        return list(pool.map(fn, items))
