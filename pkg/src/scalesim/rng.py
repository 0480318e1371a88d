"""Deterministic RNG substreams derived from one run seed.

Everything random in a run (partitioning, fleet synthesis, clustering init,
per-round training shuffles, peer selection) draws from its own substream so
that adding or reordering consumers never perturbs the others.
"""

import numpy as np

# substream tags; values are part of the on-disk determinism contract
PARTITION = 0
SPLIT = 1
FLEET = 2
CLUSTERING = 3
TRAIN = 4
PEERS = 5


def substream(seed: int, *path: int) -> np.random.Generator:
    """Generator for the substream identified by (seed, *path).

    Stable across processes and platforms (PCG64 seeded via SeedSequence).
    All path components must be non-negative integers.
    """
    return np.random.default_rng((int(seed),) + tuple(int(p) for p in path))
