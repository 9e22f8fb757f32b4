"""Budgeted random forest: bootstrap, greedy trees, validation-cost gate.

Forest-level acquisition cost of an example is the total cost of the union of
features read by all trees; a feature acquired for one tree is free for the
others.  The per-tree sum is kept as a diagnostic upper bound.
"""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._random import tree_rng
from .dataio import Dataset
from .errors import EmptyForestError, ModelFormatError, ModelVersionError
from .impurity import ImpuritySpec
from .tree import DEFAULT_MAX_DEPTH, Tree, _as_costs, grow_tree, node_from_dict, node_to_dict

logger = logging.getLogger(__name__)

FOREST_FORMAT = "budgetrf-forest"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class BudgetConfig:
    budget: float
    max_trees: int = 40
    seed: int = 0
    max_depth: int = DEFAULT_MAX_DEPTH
    threads: int = 1

    def __post_init__(self):
        if not self.budget >= 0:
            raise ValueError(f"budget must be >= 0, got {self.budget!r}")
        if self.max_trees < 1:
            raise ValueError("max_trees must be >= 1")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")


@dataclass
class Forest:
    trees: list
    spec: ImpuritySpec
    costs: tuple
    n_features: int
    n_classes: int
    budget: float = math.inf
    seed: int = 0
    label_values: tuple = None
    # average validation cost that made training reject its first tree
    infeasible_cost: float = field(default=None, compare=False)

    def __post_init__(self):
        self.costs = tuple(float(c) for c in self.costs)
        if self.label_values is None:
            self.label_values = tuple(str(i) for i in range(self.n_classes))
        self.label_values = tuple(self.label_values)

    def __len__(self):
        return len(self.trees)

    @property
    def budget_infeasible(self) -> bool:
        return not self.trees and self.infeasible_cost is not None

    def prefix(self, j: int) -> "Forest":
        return Forest(self.trees[:j], self.spec, self.costs, self.n_features, self.n_classes,
                      self.budget, self.seed, self.label_values)

    def _check_nonempty(self):
        if not self.trees:
            raise EmptyForestError("forest has no trees")

    def feature_mask(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        mask = np.zeros((len(X), self.n_features), dtype=bool)
        for t in self.trees:
            mask |= t.feature_mask(X)
        return mask

    def example_costs(self, X, costs=None) -> np.ndarray:
        c = np.asarray(self.costs if costs is None else costs, dtype=np.float64)
        return self.feature_mask(X) @ c

    def sum_tree_costs(self, X, costs=None) -> np.ndarray:
        """Per-example sum over trees of each tree's own cost (no sharing)."""
        c = np.asarray(self.costs if costs is None else costs, dtype=np.float64)
        X = np.asarray(X, dtype=np.float64)
        out = np.zeros(len(X))
        for t in self.trees:
            out += t.example_costs(X, c)
        return out

    def average_cost(self, X, costs=None) -> float:
        if len(X) == 0:
            raise ValueError("average cost needs a non-empty example set")
        return mean_cost(self.feature_mask(X), self.costs if costs is None else costs)

    def votes(self, X) -> np.ndarray:
        self._check_nonempty()
        X = np.asarray(X, dtype=np.float64)
        v = np.zeros((len(X), self.n_classes), dtype=np.int64)
        rows = np.arange(len(X))
        for t in self.trees:
            v[rows, t.predict(X)] += 1
        return v

    def predict(self, X) -> np.ndarray:
        """Majority vote; ties go to the lowest class index."""
        return self.votes(X).argmax(axis=1)

    def leaf_count_totals(self, X) -> np.ndarray:
        self._check_nonempty()
        X = np.asarray(X, dtype=np.float64)
        tot = np.zeros((len(X), self.n_classes), dtype=np.int64)
        for t in self.trees:
            tot += t.leaf_counts[t.route(X)[0]]
        return tot

    def confidence(self, X) -> np.ndarray:
        """Fraction of class-1 training examples among class-0/1 examples in the reached leaves."""
        if self.n_classes != 2:
            raise ValueError("confidence is defined for binary forests only")
        tot = self.leaf_count_totals(X)
        return tot[:, 1] / tot.sum(axis=1)

    def to_dict(self) -> dict:
        return {
            "format": FOREST_FORMAT,
            "version": FORMAT_VERSION,
            "impurity": self.spec.to_dict(),
            "costs": list(self.costs),
            "budget": None if math.isinf(self.budget) else float(self.budget),
            "seed": int(self.seed),
            "n_features": int(self.n_features),
            "n_classes": int(self.n_classes),
            "label_values": list(self.label_values),
            "n_trees": len(self.trees),
            "trees": [node_to_dict(t.root) for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d) -> "Forest":
        if not isinstance(d, dict) or d.get("format") != FOREST_FORMAT:
            raise ModelFormatError("not a serialized forest")
        if d.get("version") != FORMAT_VERSION:
            raise ModelVersionError(
                f"forest format version {d.get('version')!r} unsupported (expected {FORMAT_VERSION})")
        try:
            spec = ImpuritySpec.from_dict(d["impurity"])
            costs = tuple(float(c) for c in d["costs"])
            m, k = int(d["n_features"]), int(d["n_classes"])
            trees = [Tree(node_from_dict(r), spec, costs, m, k) for r in d["trees"]]
            if len(trees) != int(d["n_trees"]):
                raise ModelFormatError(f"header declares {d['n_trees']} trees, found {len(trees)}")
            budget = math.inf if d["budget"] is None else float(d["budget"])
            return cls(trees, spec, costs, m, k, budget, int(d["seed"]), tuple(d["label_values"]))
        except (KeyError, TypeError, ValueError) as e:
            if isinstance(e, ModelFormatError):
                raise
            raise ModelFormatError(f"malformed forest record: {e}") from e

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def loads(cls, text: str) -> "Forest":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as e:
            raise ModelFormatError(f"model is not valid JSON (truncated?): {e}") from e
        return cls.from_dict(d)


def mean_cost(mask: np.ndarray, costs) -> float:
    return float((mask @ np.asarray(costs, dtype=np.float64)).mean())


def bootstrap(n: int, rng) -> np.ndarray:
    """``n`` row indices drawn uniformly with replacement."""
    if n < 1:
        raise ValueError("bootstrap needs n >= 1")
    return np.random.default_rng(rng).integers(0, n, size=n)


def forest_example_cost(forest: Forest, x, costs=None) -> float:
    forest._check_nonempty()
    return float(forest.example_costs(np.atleast_2d(x), costs)[0])


def average_cost(forest: Forest, validation, costs=None) -> float:
    X = validation.X if isinstance(validation, Dataset) else validation
    return forest.average_cost(X, costs)


def predict(forest: Forest, x) -> int:
    return int(forest.predict(np.atleast_2d(x))[0])


def confidence(forest: Forest, x) -> float:
    return float(forest.confidence(np.atleast_2d(x))[0])


def _grow_indexed(train: Dataset, spec, costs, config: BudgetConfig, search, j: int) -> Tree:
    rng = tree_rng(config.seed, j)
    idx = bootstrap(train.n, rng)
    return grow_tree(train.X[idx], train.y[idx], spec, costs, n_classes=train.n_classes,
                     search=search, rng=rng, max_depth=config.max_depth)


def grow_forest(train: Dataset, validation: Dataset, config: BudgetConfig, spec: ImpuritySpec,
                costs, search=None) -> Forest:
    """Add bootstrap greedy trees while the validation average cost stays within budget.

    Each new tree is trained, appended and checked; the tree that pushes the
    average cost above ``config.budget`` is removed and growth stops.  If the
    very first tree is rejected the result is empty and ``budget_infeasible``
    is set.  Tree ``j`` draws from its own seed-derived stream, so growing in
    parallel waves (``config.threads``) gives the same forest as growing
    sequentially.
    """
    c = _as_costs(costs, train.m)
    if validation.m != train.m:
        raise ValueError("train and validation feature counts differ")
    Xv = validation.X
    union = np.zeros((validation.n, train.m), dtype=bool)
    trees: list[Tree] = []
    rejected = None
    pool = ThreadPoolExecutor(config.threads) if config.threads > 1 else None
    try:
        j = 0
        while j < config.max_trees and rejected is None:
            wave = range(j, min(j + config.threads, config.max_trees))
            if pool is None:
                grown = [_grow_indexed(train, spec, c, config, search, i) for i in wave]
            else:
                grown = list(pool.map(lambda i: _grow_indexed(train, spec, c, config, search, i), wave))
            for tree in grown:
                cand = union | tree.feature_mask(Xv)
                cost = mean_cost(cand, c)
                if cost > config.budget:
                    rejected = cost
                    break
                union = cand
                trees.append(tree)
                logger.debug("tree %d accepted, validation avg cost %.6g", len(trees), cost)
            j += len(wave)
    finally:
        if pool is not None:
            pool.shutdown()
    forest = Forest(trees, spec, tuple(c), train.m, train.n_classes, config.budget,
                    config.seed, train.label_values)
    if not trees:
        forest.infeasible_cost = rejected
        logger.warning("budget %.6g infeasible: first tree alone costs %.6g on validation",
                       config.budget, rejected)
    return forest
