"""Seed derivation and process-pool helpers shared by the experiment harness."""
import logging
import multiprocessing

import numpy as np

logger = logging.getLogger('copula_multiplier')


def substream(seed, *key):
    """Independent generator for the stream identified by (seed, key...).

    Identical (seed, key) pairs always yield the same draws, whatever order
    or process the streams are requested in.
    """

    key = tuple(int(k) for k in key)
    sequence = np.random.SeedSequence(int(seed), spawn_key=key)
    return np.random.Generator(np.random.Philox(sequence))


def derive_seed(seed, *key):
    """A 32-bit integer seed for the stream identified by (seed, key...)."""
    key = tuple(int(k) for k in key)
    return int(np.random.SeedSequence(int(seed), spawn_key=key).generate_state(1)[0])


def parallel_map(func, items, workers=1):
    """Map func over items, in a process pool when workers > 1.

    Results keep the order of items.
    """

    items = list(items)

    if workers is None or workers <= 1 or len(items) <= 1:
        return [func(item) for item in items]

    workers = min(int(workers), len(items))
    logger.debug(f'mapping {len(items)} tasks over {workers} worker processes')

    with multiprocessing.Pool(processes=workers) as pool:
        return pool.map(func, items)
