"""Fork-based work splitting for the heavy curve-backend sweeps.

Workers are module-level functions taking (seed, count) so chunks pickle
cleanly; each worker builds its own SystemParams.  With 2 CPUs this roughly
halves the wall-clock of the 1000-trial acceptance sweeps.
"""

from __future__ import annotations

import multiprocessing
import os


def run_chunked(worker, total: int, workers: int | None = None, base_seed: int = 0) -> list:
    """Run `worker(seed, count)` across a pool; returns the list of results."""
    if workers is None:
        workers = min(4, os.cpu_count() or 1)
    if workers <= 1:
        return [worker(base_seed, total)]
    chunk = (total + workers - 1) // workers
    jobs = []
    remaining = total
    for i in range(workers):
        n = min(chunk, remaining)
        if n <= 0:
            break
        jobs.append((base_seed + i * 1_000_003, n))
        remaining -= n
    ctx = multiprocessing.get_context("fork")
    with ctx.Pool(len(jobs)) as pool:
        return pool.starmap(worker, jobs)
