"""Exact optimal max-cost on small binary instances, and the greedy-vs-optimal check.

The optimum is taken over trees whose leaves all have zero impurity and that
read each feature at most once per root-to-leaf path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .impurity import ImpuritySpec, impurity
from .stumps import ExhaustiveStumps
from .tree import Tree, grow_tree

MAX_EXAMPLES = 64
MAX_FEATURES = 6


class OracleLimitError(ValueError):
    pass


@dataclass
class SmallInstance:
    X: np.ndarray
    y: np.ndarray
    costs: np.ndarray
    spec: ImpuritySpec = field(default_factory=ImpuritySpec)
    n_classes: int = None
    max_examples: int = MAX_EXAMPLES
    max_features: int = MAX_FEATURES

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.int64)
        self.costs = np.asarray(self.costs, dtype=np.float64)
        n, m = self.X.shape
        if n < 1 or n > self.max_examples:
            raise OracleLimitError(f"{n} examples outside 1..{self.max_examples}")
        if m < 1 or m > self.max_features:
            raise OracleLimitError(f"{m} features outside 1..{self.max_features}")
        if not np.isin(self.X, (0.0, 1.0)).all():
            raise OracleLimitError("oracle instances must have binary (0/1) features")
        if len(self.y) != n or len(self.costs) != m:
            raise ValueError("label or cost vector length mismatch")
        if np.any(self.costs <= 0):
            raise ValueError("costs must be > 0")
        if self.n_classes is None:
            self.n_classes = int(self.y.max()) + 1

    @property
    def counts(self) -> np.ndarray:
        return np.bincount(self.y, minlength=self.n_classes)

    def impurity(self):
        return impurity(self.spec, self.counts)


def _masks(inst: SmallInstance):
    n, m = inst.X.shape
    fmask = [sum(1 << i for i in range(n) if inst.X[i, t]) for t in range(m)]
    cmask = [sum(1 << i for i in range(n) if inst.y[i] == k) for k in range(inst.n_classes)]
    return fmask, cmask


def opt_max_cost(inst: SmallInstance) -> float:
    """Minimum max-cost over zero-impurity-leaf trees; ``inf`` if none exists.

    Memoized on the example subset (a bitmask).  A feature already read on the
    path is constant on the subset, so skipping constant features enforces
    single use per path without carrying the path in the key.
    """
    fmask, cmask = _masks(inst)
    costs = [float(c) for c in inst.costs]
    spec = inst.spec
    memo: dict[int, float] = {}

    def opt(S):
        if S in memo:
            return memo[S]
        if impurity(spec, [(S & cm).bit_count() for cm in cmask]) == 0:
            memo[S] = 0.0
            return 0.0
        best = math.inf
        for t, fm in enumerate(fmask):
            if costs[t] >= best:
                continue
            S1 = S & fm
            if S1 == 0 or S1 == S:
                continue
            a = opt(S ^ S1)
            if costs[t] + a >= best:
                continue
            v = costs[t] + max(a, opt(S1))
            if v < best:
                best = v
        memo[S] = best
        return best

    return opt((1 << inst.X.shape[0]) - 1)


def naive_opt_max_cost(inst: SmallInstance) -> float:
    """Enumerate every feature-ordered tree without memoization or pruning.

    Exponential; intended for instances with at most 3 features and 8 examples.
    """
    X, y, costs, spec, k = inst.X, inst.y, inst.costs, inst.spec, inst.n_classes

    def rec(rows, avail):
        if impurity(spec, np.bincount(y[rows], minlength=k)) == 0:
            return 0.0
        best = math.inf
        for t in avail:
            rest = tuple(a for a in avail if a != t)
            zero = [r for r in rows if X[r, t] == 0]
            one = [r for r in rows if X[r, t] == 1]
            best = min(best, float(costs[t]) + max(rec(zero, rest), rec(one, rest)))
        return best

    return rec(list(range(len(y))), tuple(range(X.shape[1])))


def greedy_tree(inst: SmallInstance) -> Tree:
    """Greedy tree with every distinct split enumerated (exact inner minimization)."""
    return grow_tree(inst.X, inst.y, inst.spec, inst.costs, n_classes=inst.n_classes,
                     search=ExhaustiveStumps())


def min_nonzero_impurity(spec: ImpuritySpec, counts) -> float:
    """Smallest nonzero impurity over all sub-multisets of a count vector (``inf`` if none)."""
    best = math.inf
    for sub in product(*(range(int(c) + 1) for c in counts)):
        v = impurity(spec, sub)
        if 0 < v < best:
            best = v
    return best


def is_base_case(inst: SmallInstance) -> bool:
    f = inst.impurity()
    return f > 0 and f == min_nonzero_impurity(inst.spec, inst.counts)


@dataclass
class BoundCheck:
    impurity: float
    greedy: float
    opt: float
    ratio: float
    bound: float

    @property
    def ok(self) -> bool:
        return self.ratio <= self.bound + 1e-12


def check_bound(inst: SmallInstance) -> BoundCheck:
    """Compare the greedy max-cost with the optimum against ``ln F(S) + 1``.

    A pure instance has ratio 1 by convention.
    """
    f = inst.impurity()
    opt = opt_max_cost(inst)
    if math.isinf(opt):
        raise ValueError("instance has no zero-impurity tree (conflicting duplicate rows)")
    greedy = greedy_tree(inst).max_cost(inst.X)
    if f == 0:
        return BoundCheck(f, greedy, opt, 1.0, 1.0)
    return BoundCheck(f, greedy, opt, greedy / opt, math.log(f) + 1.0)


def random_instance(rng, spec: ImpuritySpec = None, max_features: int = 4, max_examples: int = 32,
                    max_cost: int = 5, max_classes: int = 3) -> SmallInstance:
    """Random consistent binary instance: identical rows always share a label."""
    rng = np.random.default_rng(rng)
    if max_features > MAX_FEATURES or max_examples > MAX_EXAMPLES:
        raise OracleLimitError(
            f"limits exceed oracle caps ({MAX_FEATURES} features, {MAX_EXAMPLES} examples)")
    m = int(rng.integers(1, max_features + 1))
    n = int(rng.integers(1, max_examples + 1))
    k = int(rng.integers(2, max_classes + 1))
    X = rng.integers(0, 2, size=(n, m))
    pattern_label = rng.integers(0, k, size=2**m)
    code = X @ (1 << np.arange(m))
    y = pattern_label[code]
    costs = rng.integers(1, max_cost + 1, size=m)
    return SmallInstance(X, y, costs, spec or ImpuritySpec(), k)
