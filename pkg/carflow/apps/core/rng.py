"""
Seeded random streams.

Every stochastic draw goes through a numpy Generator derived from the run seed
plus a tuple of stream keys (case index, run index, ...). The same keys give
the same stream no matter which worker process evaluates them.
"""

import numpy as np


def make_rng(seed, *keys):
    """Generator for the stream identified by (seed, *keys)"""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, keys)]))
