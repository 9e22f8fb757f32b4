"""Threshold stumps: the per-feature classifier families.

A stump on feature ``t`` sends an example to outcome 0 when
``x[t] <= threshold`` and to outcome 1 otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Stump:
    feature: int
    threshold: float

    def outcomes(self, X: np.ndarray) -> np.ndarray:
        """Boolean array, True where the example goes to outcome 1."""
        return X[:, self.feature] > self.threshold


def split(stump: Stump, X: np.ndarray, idx: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Partition ``idx`` (row indices into ``X``) by the stump outcome."""
    idx = np.asarray(idx)
    right = X[idx, stump.feature] > stump.threshold
    return idx[~right], idx[right]


@dataclass(frozen=True)
class StumpBudgetPolicy:
    """Number of random candidates to draw, keyed on the node size.

    More than ``large_at`` examples draws ``large``; at least ``medium_at``
    draws ``medium``; anything smaller draws ``small``.
    """

    large: int = 80
    medium: int = 40
    small: int = 20
    large_at: int = 2000
    medium_at: int = 500

    def __post_init__(self):
        if min(self.large, self.medium, self.small) < 1:
            raise ValueError("candidate counts must be >= 1")

    def n_candidates(self, n_examples: int) -> int:
        if n_examples > self.large_at:
            return self.large
        if n_examples >= self.medium_at:
            return self.medium
        return self.small


DEFAULT_POLICY = StumpBudgetPolicy()


def generate_candidates(X, idx, feature, policy=DEFAULT_POLICY, rng=None) -> list[Stump]:
    """Draw random stumps with thresholds uniform over the node's value range.

    A feature that is constant on ``idx`` yields stumps that route every
    example to outcome 0; the risk computation treats those as useless.
    """
    if len(idx) == 0:
        raise ValueError("cannot generate stumps for an empty node")
    rng = np.random.default_rng(rng)
    values = X[idx, feature]
    lo, hi = float(values.min()), float(values.max())
    n = policy.n_candidates(len(idx))
    thresholds = rng.uniform(lo, hi, size=n)
    return [Stump(int(feature), float(t)) for t in thresholds]


def exhaustive_candidates(X, idx, feature) -> list[Stump]:
    """All distinct splits of the node on ``feature``: midpoints of sorted values."""
    values = np.unique(X[idx, feature])
    mids = (values[:-1] + values[1:]) / 2.0
    return [Stump(int(feature), float(t)) for t in mids]


class RandomStumps:
    """Random candidate search, the approximate inner minimization."""

    def __init__(self, policy: StumpBudgetPolicy = DEFAULT_POLICY):
        self.policy = policy

    def __call__(self, X, idx, feature, rng):
        return generate_candidates(X, idx, feature, self.policy, rng)

    def __repr__(self):
        return f"RandomStumps({self.policy})"


class ExhaustiveStumps:
    """Every distinct split per feature.  On binary features this is exact."""

    def __call__(self, X, idx, feature, rng):
        return exhaustive_candidates(X, idx, feature)

    def __repr__(self):
        return "ExhaustiveStumps()"


class FixedStumps:
    """A fixed family per feature; features absent from the mapping get none."""

    def __init__(self, families: dict[int, list[Stump]]):
        self.families = {int(k): list(v) for k, v in families.items()}

    def __call__(self, X, idx, feature, rng):
        return list(self.families.get(int(feature), []))


def make_search(name: str, policy: StumpBudgetPolicy = DEFAULT_POLICY):
    if name == "random":
        return RandomStumps(policy)
    if name == "exhaustive":
        return ExhaustiveStumps()
    raise ValueError(f"unknown stump search {name!r}; expected 'random' or 'exhaustive'")
