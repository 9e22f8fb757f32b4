"""Synthetic datasets used to check tree growth and forest costs."""

from __future__ import annotations

import numpy as np

from .dataio import Dataset
from .stumps import Stump


def two_stump_toy() -> tuple[Dataset, dict]:
    """60 examples (30 per class), two unit-cost binary features.

    Feature 0 isolates 20 class-2 examples from the rest; feature 1 cuts the
    set into two halves of 15 + 15.  Also returns the single-stump family of
    each feature.  Only the split outcome counts are meaningful.
    """
    n = 60
    y = np.repeat([0, 1], 30)
    X = np.zeros((n, 2))
    X[40:60, 0] = 1.0
    X[15:30, 1] = 1.0
    X[45:60, 1] = 1.0
    data = Dataset(X, y, 2, ("t1", "t2"), ("1", "2"))
    families = {0: [Stump(0, 0.5)], 1: [Stump(1, 0.5)]}
    return data, families


def synth1024_label(i: int) -> int:
    """Original (1-based) class of integer ``i`` in 0..1023."""
    special = {0: 2, 256: 3, 512: 4, 768: 1}
    if i in special:
        return special[i]
    return i // 256 + 1


def synthetic_1024() -> Dataset:
    """Integers 0..1023 as 10 binary features (feature 0 is the most significant bit).

    Labels are the quarter index of the integer, except that the first
    integer of each quarter carries the next quarter's label (cyclically).
    """
    ints = np.arange(1024)
    X = ((ints[:, None] >> (9 - np.arange(10))[None, :]) & 1).astype(np.float64)
    y = np.array([synth1024_label(i) - 1 for i in ints])
    return Dataset(X, y, 4, tuple(f"b{j}" for j in range(10)), ("1", "2", "3", "4"))


def redundant_cost(seed: int = 0, n: int = 400, n_pairs: int = 5, noise: float = 0.05,
                   cheap: float = 1.0, expensive: float = 100.0) -> tuple[Dataset, np.ndarray]:
    """Binary task where every signal is observable through a cheap and an expensive twin.

    Feature ``2j`` (cost ``cheap``) and feature ``2j + 1`` (cost ``expensive``)
    are the same latent signal plus independent noise of scale ``noise``.
    """
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n, n_pairs))
    w = np.linspace(1.0, 0.2, n_pairs)
    y = (z @ w + 0.3 * rng.standard_normal(n) > 0).astype(np.int64)
    X = np.empty((n, 2 * n_pairs))
    X[:, 0::2] = z + noise * rng.standard_normal((n, n_pairs))
    X[:, 1::2] = z + noise * rng.standard_normal((n, n_pairs))
    names = []
    for j in range(n_pairs):
        names += [f"cheap{j}", f"expensive{j}"]
    costs = np.tile([cheap, expensive], n_pairs).astype(np.float64)
    return Dataset(X, y, 2, tuple(names), ("0", "1")), costs


GENERATORS = ("figure1", "synth1024", "redundant")


def generate(name: str, seed: int = 0) -> tuple[Dataset, np.ndarray]:
    """Dataset and cost vector for a generator keyword."""
    if name == "figure1":
        data, _ = two_stump_toy()
        return data, np.ones(data.m)
    if name == "synth1024":
        data = synthetic_1024()
        return data, np.ones(data.m)
    if name == "redundant":
        return redundant_cost(seed)
    raise ValueError(f"unknown dataset {name!r}; expected one of {GENERATORS}")
