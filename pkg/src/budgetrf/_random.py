"""Seed derivation.

Every random stream is a child of one master seed, addressed by a key path:

    tree j of a forest with seed s        -> SeedSequence(s, spawn_key=(0, j))
    forest seed for repeat r, alpha idx a -> SeedSequence(s, spawn_key=(1, r, a))
    train/validation/test row split       -> SeedSequence(s, spawn_key=(2,))

so any single tree or sweep cell can be regenerated without replaying others.
"""

import numpy as np

TREE_STREAM = 0
SWEEP_STREAM = 1
SPLIT_STREAM = 2


def substream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(key)))


def derive_seed(seed: int, *key: int) -> int:
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(key))
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def tree_rng(seed: int, index: int) -> np.random.Generator:
    return substream(seed, TREE_STREAM, index)
