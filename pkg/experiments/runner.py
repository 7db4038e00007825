# experiments/runner.py

"""
Batch planning and worker fan-out for Monte Carlo runs.

A run of N samples is cut into fixed-size batches; batch b always draws from
``rng.child(b)``, and results are merged in batch order. The merged result
therefore depends on (seed, config, batch count) only, whatever the number
of workers.
"""

import functools
import logging
from concurrent.futures import ProcessPoolExecutor

import numpy as np
from django.conf import settings

from levy.cadlag import TargetSet
from levy.exceptions import PreconditionError
from levy.levy_model import LevyModel
from levy.limit_measures import Estimate
from levy.simulate import (
    IncrementModel,
    RngStream,
    sample_scaled_levy_batch,
    sample_scaled_rw_batch,
    subordinated_walk_batch,
)

from .catalog import TargetSpec

logger = logging.getLogger(__name__)

SAMPLERS = ('levy', 'walk', 'subordinated')

# top-level stream ids, one per purpose within a scenario run
STREAMS = {
    'mc': 0,
    'limit': 1,
    'bootstrap': 2,
    'walk': 3,
    'subordinated': 4,
    'corridors': 5,
}


def plan_batches(total, batch_size):
    """Batch sizes summing to ``total``; all full except possibly the last."""
    if total < 1 or batch_size < 1:
        raise PreconditionError(f"Need positive totals and batch sizes, got {total} and {batch_size}.")
    full, rest = divmod(total, batch_size)
    return [batch_size] * full + ([rest] if rest else [])


def run_batches(job, total, rng, batch_size, workers=1):
    """Call ``job(size, stream)`` once per batch and return the results in batch order."""
    sizes = plan_batches(total, batch_size)
    streams = [rng.child(b) for b in range(len(sizes))]
    if workers <= 1 or len(sizes) == 1:
        return [job(size, stream) for size, stream in zip(sizes, streams)]
    logger.info(f"Fanning {len(sizes)} batches of up to {batch_size} samples out to {workers} workers")
    with ProcessPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(job, sizes, streams))


def default_sampler(source):
    if isinstance(source, LevyModel):
        return 'levy'
    if isinstance(source, IncrementModel):
        return 'walk'
    raise PreconditionError(f"Cannot simulate from {type(source).__name__}.")


def sample_batch(source, sampler, n, size, rng, m_grid=None):
    if sampler == 'levy':
        return sample_scaled_levy_batch(source, n, size, rng, m_grid=m_grid)
    if sampler == 'walk':
        return sample_scaled_rw_batch(source, n, size, rng)
    if sampler == 'subordinated':
        return subordinated_walk_batch(source, n, size, rng, m_grid=m_grid)
    raise PreconditionError(f"Unknown sampler '{sampler}'. Choices are {', '.join(SAMPLERS)}.")


def _as_target(target):
    return target.build() if isinstance(target, TargetSpec) else target


# Module-level batch jobs so that they pickle for the process pool.

def count_hits(source, sampler, n, targets, m_grid, size, rng):
    """Hits of one simulated batch in each target, as an int array."""
    batch = sample_batch(source, sampler, n, size, rng, m_grid=m_grid)
    return np.array([int(_as_target(t).contains_batch(batch).sum()) for t in targets], dtype=np.int64)


def sample_functionals(source, sampler, n, m_grid, size, rng):
    """(sup, terminal) of one simulated batch, shape (2, size)."""
    batch = sample_batch(source, sampler, n, size, rng, m_grid=m_grid)
    return np.stack((batch.sup(), batch.terminal()))


def mc_hits(source, n, targets, N, rng, batch_size, workers=1, m_grid=None, sampler=None):
    """Total hits of N simulated paths in each target, evaluated on the same paths."""
    if N < 1:
        raise PreconditionError(f"N must be a positive integer, got {N}.")
    if workers > 1 and any(isinstance(t, TargetSet) for t in targets):
        raise PreconditionError("Parallel runs need catalog targets (TargetSpec), not TargetSet objects.")
    sampler = sampler or default_sampler(source)
    job = functools.partial(count_hits, source, sampler, n, tuple(targets), m_grid)
    return np.sum(run_batches(job, N, rng, batch_size, workers), axis=0)


def mc_probability(source, n, A, N, rng, batch_size=None, workers=1, m_grid=None, sampler=None):
    """Crude Monte Carlo estimate of P(X_n in A) with its binomial standard error."""
    batch_size = batch_size or settings.HEAVYTAIL_BATCH_SIZE
    hits = mc_hits(source, n, [A], N, rng, batch_size, workers, m_grid, sampler)
    return Estimate.from_hits(int(hits[0]), N, params={'n': n, 'target': A.name})


def mc_functionals(source, n, N, rng, batch_size, workers=1, m_grid=None, sampler=None):
    sampler = sampler or default_sampler(source)
    job = functools.partial(sample_functionals, source, sampler, n, m_grid)
    return np.concatenate(run_batches(job, N, rng, batch_size, workers), axis=1)


def scenario_stream(seed, purpose):
    """Independent top-level stream per purpose of a scenario run."""
    return RngStream(seed, stream_id=STREAMS[purpose])
