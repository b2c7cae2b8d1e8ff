"""Deterministic RNG substreams.

Every stochastic kernel draws from a generator derived from
(seed, *key) via SeedSequence spawn keys.  Results are therefore
reproducible and independent of execution order or thread count, and a
chain resumed at iteration i replays exactly the draws of an
uninterrupted run.
"""

import numpy as np

# Reserved kernel ids for substream keys.
INIT = 0
ADJACENCY = 1
PARENTS = 2
WEIGHTS = 3
IMPULSE = 4
BACKGROUND = 5
GRAPH_HYPERS = 6
WEIGHT_SCALE = 7
PROCESS_IDS = 8
SIMULATE = 9
EVAL = 10


def substream(seed, *key):
    """Return a Generator for the substream identified by integer key parts."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def as_generator(seed_or_rng):
    """Accept either an integer seed or an existing Generator."""
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.default_rng(seed_or_rng)
