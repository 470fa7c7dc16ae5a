"""Deterministic Monte Carlo plumbing: replicate fan-out and reduction.

Replicate i of an estimator is a pure function of split(seed, i), and work
is cut into fixed-size spans of replicate indices, so the per-replicate
values are identical for any worker count. Reductions run over the
gathered array in replicate order with numpy's pairwise summation, making
every estimate reproducible bit for bit.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError
from .rng import GaussianStream, Seed, split

REPLICATE_SPAN = 512   # replicates per task; fixed so task layout never varies
CHUNK_SAMPLES = 4096   # batch size for internally vectorized estimators


@dataclass(frozen=True)
class MomentEstimate:
    """A Monte Carlo estimate with its provenance."""

    mean: float
    std_error: float
    samples: int
    q: float
    seed: Seed


def from_values(values: np.ndarray, q: float, seed: Seed) -> MomentEstimate:
    """Mean and standard error (sample sd / sqrt(n)) of replicate values."""
    values = np.asarray(values, dtype=float)
    n = values.size
    if n < 2:
        raise PreconditionError("an estimate needs at least 2 samples")
    mean = float(np.sum(values) / n)
    var = float(np.sum((values - mean) ** 2) / (n - 1))
    return MomentEstimate(mean, math.sqrt(var / n), n, q, seed)


def _eval_span(task):
    fn, args, seed, start, stop, stream_cls = task
    return np.asarray([fn(stream_cls(split(seed, i)), *args) for i in range(start, stop)])


def _eval_chunk(task):
    fn, args, seed, index, count, stream_cls = task
    return np.asarray(fn(stream_cls(split(seed, index)), count, *args))


def _run_tasks(runner, tasks, workers):
    if workers <= 1 or len(tasks) == 1:
        return [runner(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(runner, tasks))


def map_replicates(fn, args, seed: Seed, samples: int, workers: int = 1,
                   stream_cls=GaussianStream) -> np.ndarray:
    """values[i] = fn(stream_cls(split(seed, i)), *args) for i in 0..samples-1.

    fn must be a module-level callable (it is pickled when workers > 1).
    """
    tasks = [(fn, args, seed, start, min(start + REPLICATE_SPAN, samples), stream_cls)
             for start in range(0, samples, REPLICATE_SPAN)]
    return np.concatenate(_run_tasks(_eval_span, tasks, workers))


def map_chunks(fn, args, seed: Seed, samples: int, workers: int = 1,
               chunk: int = CHUNK_SAMPLES, stream_cls=GaussianStream) -> np.ndarray:
    """Concatenate fn(stream_cls(split(seed, c)), count_c, *args) over chunks.

    For estimators that vectorize internally: chunk c owns replicates
    [c*chunk, c*chunk + count_c) and draws them all from one child stream.
    The chunk size is fixed per call site, never derived from the worker
    count, so results are worker-count independent.
    """
    tasks = []
    for index, start in enumerate(range(0, samples, chunk)):
        tasks.append((fn, args, seed, index, min(chunk, samples - start), stream_cls))
    return np.concatenate(_run_tasks(_eval_chunk, tasks, workers))
