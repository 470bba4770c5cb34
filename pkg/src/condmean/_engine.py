"""Deterministic chunked driver for Monte Carlo experiments.

Trials are partitioned into fixed-size chunks; chunk i always consumes
the stream addressed by (seed, ..., i), so results are a pure function
of (config, seed) and never of the worker count.  Workers are threads:
chunk workloads are numpy/numba heavy and release the GIL, and thread
scheduling cannot reorder the reduction because results are collected
by chunk index.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence, TypeVar

from .errors import DomainError

CHUNK_TRIALS = 1 << 16
_Z95 = 1.959963984540054

T = TypeVar("T")


def resolve_workers(workers: int | None) -> int:
    """Explicit argument, else CONDMEAN_WORKERS, else the CPU count."""
    if workers is None:
        env = os.environ.get("CONDMEAN_WORKERS", "").strip()
        workers = int(env) if env else (os.cpu_count() or 1)
    if workers < 1:
        raise DomainError(f"workers must be >= 1, got {workers}")
    return workers


def chunk_sizes(trials: int) -> list[int]:
    """Fixed partition of a trial budget, independent of workers."""
    if trials < 1:
        raise DomainError(f"trials must be >= 1, got {trials}")
    full, rem = divmod(trials, CHUNK_TRIALS)
    return [CHUNK_TRIALS] * full + ([rem] if rem else [])


def run_chunks(
    trials: int, workers: int | None, fn: Callable[[int, int], T]
) -> list[T]:
    """Evaluate fn(chunk_index, chunk_trials) for every chunk, in order.

    The returned list is ordered by chunk index regardless of which
    thread finished first; callers reduce it sequentially so floating
    point accumulation order is reproducible.
    """
    sizes = chunk_sizes(trials)
    workers = resolve_workers(workers)
    if workers == 1 or len(sizes) == 1:
        return [fn(i, m) for i, m in enumerate(sizes)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, i, m) for i, m in enumerate(sizes)]
        return [f.result() for f in futures]


@dataclass(frozen=True)
class TailEstimate:
    """Frequency estimate with its standard error and 95% Wilson interval."""

    p_hat: float
    stderr: float
    ci_low: float
    ci_high: float
    trials: int
    hits: int


def wilson_interval(hits: int, trials: int) -> tuple[float, float]:
    """95% Wilson score interval for a binomial proportion."""
    if trials < 1 or not 0 <= hits <= trials:
        raise DomainError(f"bad counts: hits={hits}, trials={trials}")
    p = hits / trials
    z2 = _Z95 * _Z95
    denom = 1.0 + z2 / trials
    center = (p + z2 / (2.0 * trials)) / denom
    half = _Z95 * math.sqrt(p * (1.0 - p) / trials + z2 / (4.0 * trials * trials)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def estimate_from_hits(hits: int, trials: int) -> TailEstimate:
    p = hits / trials
    lo, hi = wilson_interval(hits, trials)
    return TailEstimate(
        p_hat=p,
        stderr=math.sqrt(p * (1.0 - p) / trials),
        ci_low=lo,
        ci_high=hi,
        trials=trials,
        hits=hits,
    )


def reduce_hits(per_chunk: Sequence[int], trials: int) -> TailEstimate:
    return estimate_from_hits(int(sum(per_chunk)), trials)
