"""
Timing harness for the cost-volume kernel, sequential against threaded.
"""
import time
import logging
import numpy as np
from .errors import IcmError
from .matching import FeatureGrid, cost_volume

logger = logging.getLogger(__name__)

BENCH_HEADER = ['size', 'window', 'threads', 'seconds', 'entries_per_sec', 'storage']

class BenchResult(object):
    def __init__(self, size, window, threads, seconds, entries, storage):
        self.size = size
        self.window = window
        self.threads = threads
        self.seconds = seconds
        self.entries = entries
        self.storage = storage

    @property
    def entries_per_sec(self):
        return self.entries/self.seconds if self.seconds > 0 else float('inf')

    def to_row(self):
        window = '' if self.window is None else str(self.window)
        storage = 'x'.join(str(n) for n in self.storage)
        return [str(self.size), window, str(self.threads), f'{self.seconds:.6f}',
                f'{self.entries_per_sec:.1f}', storage]

def random_grids(size, channels, seed):
    rng = np.random.default_rng(seed)
    shape = (size, size, channels)
    return (FeatureGrid(rng.standard_normal(shape).astype(np.float32)),
            FeatureGrid(rng.standard_normal(shape).astype(np.float32)))

def _timed(src, tgt, window, threads, repeats):
    best = None
    for _ in range(repeats):
        start = time.perf_counter()
        cost = cost_volume(src, tgt, window=window, threads=threads)
        elapsed = time.perf_counter()-start
        best = elapsed if best is None else min(best, elapsed)
    return cost, best

def same_volume(a, b):
    if not np.array_equal(a.scores, b.scores):
        return False
    if a.valid is None or b.valid is None:
        return a.valid is b.valid
    return np.array_equal(a.valid, b.valid)

def bench_cost_volume(size, channels=16, window=None, threads=4, seed=0, repeats=1):
    """
    Times one size sequentially and with `threads` workers. Raises
    IcmError when the two volumes are not bitwise equal.
    Returns [sequential, parallel] results.
    """
    src, tgt = random_grids(size, channels, seed)
    results = []
    reference = None
    for nthreads in (1, threads):
        cost, seconds = _timed(src, tgt, window, nthreads, repeats)
        if reference is None:
            reference = cost
        elif not same_volume(reference, cost):
            raise IcmError(f"{nthreads}-thread cost volume differs from the sequential one"
                           f" at size {size}")
        entries = int(np.prod(cost.storage_shape))
        results.append(BenchResult(size, window, nthreads, seconds, entries, cost.storage_shape))
        logger.info("size %d, window %s, %d threads: %.4fs", size, window, nthreads, seconds)
    return results
