import logging

import numpy as np
from multiprocessing.pool import ThreadPool

log = logging.getLogger(__name__)

SEED_MASK = (1 << 64) - 1


def make_rng(seed):
    """Return a numpy Generator seeded with the 64-bit masked seed."""
    return np.random.default_rng(int(seed) & SEED_MASK)


def run_parallel(func, items, workers=None):
    """Apply func to every item on a thread pool and return the results in order.

    :param callable func: function of a single item.
    :param list items: work items.
    :param int workers: pool size, the pool default when None.
    :return list: func(item) for every item.
    """
    items = list(items)
    if len(items) <= 1:
        return [func(item) for item in items]

    pool = ThreadPool(workers)
    try:
        async_results = [pool.apply_async(func, (item,)) for item in items]
        return [async_result.get() for async_result in async_results]
    finally:
        pool.close()
        pool.join()


def chunks(count, size):
    """Split range(count) into consecutive slices of at most size elements."""
    return [slice(start, min(start + size, count)) for start in range(0, count, size)]


def parse_int_list(value):
    """Parse '8,16,32' into [8, 16, 32]."""
    try:
        return [int(item) for item in value.split(',') if item.strip()]
    except ValueError:
        raise ValueError("Invalid integer list: %r" % value)


def parse_float_list(value):
    """Parse '0.5,0.25' or '0.5 0.25' into [0.5, 0.25]."""
    try:
        return [float(item) for item in value.replace(',', ' ').split()]
    except ValueError:
        raise ValueError("Invalid number list: %r" % value)


def parse_range(value):
    """Parse 'start:stop:step' into the values start, start + step, ... below stop.

    The values are computed as start + i * step to avoid accumulated drift.
    """
    try:
        start, stop, step = [float(item) for item in value.split(':')]
    except ValueError:
        raise ValueError("Invalid range %r, expected start:stop:step" % value)

    if step <= 0 or stop < start:
        raise ValueError("Invalid range %r, expected start <= stop and step > 0" % value)

    count = int(np.floor((stop - start) / step + 1e-9))
    if start + count * step < stop - 1e-9 * step:
        count += 1
    return [start + index * step for index in range(count)]
