"""Seeded random streams and the worker pool used by the sweeps.

Every stochastic quantity in the package is drawn from a
``numpy.random.Generator`` derived from a base seed plus a path of
integers and stage names (e.g. ``(seed, 'sweep', 3)``). Derivation goes
through ``numpy.random.SeedSequence`` spawn keys, so streams for
different grid points, delays and shot chunks are statistically
independent and do not depend on the order in which they are executed.
"""

import concurrent.futures
import logging
import os
import zlib

import numpy as np

from fieldoscopysim.errors import ConfigurationError

logger = logging.getLogger(__name__)

MAX_SEED = 2 ** 64 - 1
THREADS_VARIABLE = 'QFS_THREADS'


def validate_seed(seed, key='seed'):
    """Check that a seed is an unsigned 64-bit integer and return it."""
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise ConfigurationError(
            'seed must be an integer, got {!r}'.format(seed), key=key)
    if seed < 0 or seed > MAX_SEED:
        raise ConfigurationError(
            'seed must lie in [0, 2**64 - 1], got {}'.format(seed), key=key)
    return int(seed)


def _spawn_key(path):
    key = []
    for part in path:
        if isinstance(part, str):
            key.append(zlib.crc32(part.encode('utf-8')))
        else:
            key.append(int(part))
    return tuple(key)


def derive_seed_sequence(seed, *path):
    """Seed sequence for the stream identified by ``path`` under ``seed``.

    Parameters
    ----------
    seed : int
        Base seed of the run.
    *path : int or str
        Stage names and indices identifying the stream.

    Returns
    -------
    numpy.random.SeedSequence
    """
    seed = validate_seed(seed)
    return np.random.SeedSequence(entropy=seed, spawn_key=_spawn_key(path))


def derive_seed(seed, *path):
    """A child 64-bit seed, for handing to another seeded configuration."""
    state = derive_seed_sequence(seed, *path).generate_state(1, np.uint64)
    child = int(state[0])
    logger.debug('derived seed %d from %d via %r', child, seed, path)
    return child


def derive_rng(seed, *path):
    """A PCG64 generator for the stream identified by ``path``."""
    return np.random.Generator(np.random.PCG64(
        derive_seed_sequence(seed, *path)))


def worker_count(workers=None):
    """Number of worker threads to use.

    ``workers`` takes precedence; otherwise ``QFS_THREADS`` is read, with
    0 or an unset variable meaning one worker per CPU.
    """
    if workers is None:
        raw = os.environ.get(THREADS_VARIABLE, '0').strip() or '0'
        try:
            workers = int(raw)
        except ValueError:
            raise ConfigurationError(
                'must be an integer, got {!r}'.format(raw),
                key=THREADS_VARIABLE)
    if workers < 0:
        raise ConfigurationError(
            'worker count must be nonnegative', key=THREADS_VARIABLE)
    if workers == 0:
        workers = os.cpu_count() or 1
    return workers


def parallel_map(func, items, workers=None):
    """Apply ``func`` to every item on a thread pool, preserving order.

    Results do not depend on the number of workers as long as ``func``
    derives its own random stream from its argument.
    """
    items = list(items)
    workers = min(worker_count(workers), max(len(items), 1))
    if workers == 1:
        return [func(item) for item in items]
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))
