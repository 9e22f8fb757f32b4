"""Greedy minimax cost-weighted-impurity tree induction.

At each node with example set ``S`` and impurity ``F(S) > 0`` the risk of
feature ``t`` is

    R(t) = min over stumps g on t of  max over outcomes i of  c(t) / (F(S) - F(S_i))

and the node splits on the feature of least risk with its best stump.  Since
the outcome maximizing that ratio is the one with the smallest impurity
reduction, ``R(t) = c(t) / max_g min_i (F(S) - F(S_i))``; a zero reduction on
either side makes the stump useless (infinite risk).
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

import numpy as np

from .errors import ModelFormatError, ModelVersionError
from .impurity import ImpuritySpec, impurity, impurity_batch
from .stumps import RandomStumps, Stump

logger = logging.getLogger(__name__)

TREE_FORMAT = "budgetrf-tree"
FORMAT_VERSION = 1
DEFAULT_MAX_DEPTH = 64


@dataclass
class Leaf:
    counts: tuple
    label: int

    @classmethod
    def from_counts(cls, counts) -> "Leaf":
        counts = tuple(int(c) for c in counts)
        return cls(counts, int(np.argmax(counts)))


@dataclass
class Internal:
    stump: Stump
    counts: tuple
    left: "Node"
    right: "Node"

    @property
    def feature(self) -> int:
        return self.stump.feature


Node = Union[Leaf, Internal]


def _as_costs(costs, m=None) -> np.ndarray:
    c = np.asarray(costs, dtype=np.float64).ravel()
    if m is not None and len(c) != m:
        raise ValueError(f"cost vector has {len(c)} entries, data has {m} features")
    if not np.all(np.isfinite(c)) or np.any(c <= 0):
        raise ValueError("feature costs must be finite and > 0")
    return c


def _to_exact(v):
    if isinstance(v, (float, np.floating)):
        return Fraction(float(v))
    return int(v)


def _class_counts(y, idx, n_classes) -> np.ndarray:
    return np.bincount(y[idx], minlength=n_classes)


def risk(candidates, X, y, idx, spec: ImpuritySpec, cost, n_classes=None, parent_impurity=None):
    """Risk of one feature over its candidate stumps.

    Returns ``(risk, stump)`` with ``risk`` an exact :class:`Fraction` or
    ``math.inf`` when no candidate reduces impurity on both outcomes (the
    returned stump is then ``None``).  Ties go to the first candidate.
    """
    if not candidates:
        return math.inf, None
    idx = np.asarray(idx)
    if n_classes is None:
        n_classes = int(y.max()) + 1
    feature = candidates[0].feature
    if any(c.feature != feature for c in candidates):
        raise ValueError("all candidates of one risk evaluation must share a feature")
    yy = y[idx]
    vals = X[idx, feature]
    parent = np.bincount(yy, minlength=n_classes)
    if parent_impurity is None:
        parent_impurity = impurity(spec, parent)
    thresholds = np.array([c.threshold for c in candidates], dtype=np.float64)

    left = np.empty((len(candidates), n_classes), dtype=np.int64)
    for k in range(n_classes):
        sv = np.sort(vals[yy == k])
        left[:, k] = np.searchsorted(sv, thresholds, side="right")
    right = parent[None, :] - left
    f_left = impurity_batch(spec, left)
    f_right = impurity_batch(spec, right)

    best_j, best_red = -1, None
    for j in range(len(candidates)):
        worst = f_left[j] if f_left[j] >= f_right[j] else f_right[j]
        red = parent_impurity - worst
        if red > 0 and (best_red is None or red > best_red):
            best_j, best_red = j, red
    if best_j < 0:
        return math.inf, None
    return Fraction(float(cost)) / _to_exact(best_red), candidates[best_j]


@dataclass
class Tree:
    root: Node
    spec: ImpuritySpec
    costs: tuple
    n_features: int
    n_classes: int

    def __post_init__(self):
        self.costs = tuple(float(c) for c in self.costs)
        self._index_leaves()

    def _index_leaves(self):
        self._leaves = []
        self._leaf_ids = {}
        stack = [self.root]
        while stack:
            node = stack.pop()
            if isinstance(node, Leaf):
                self._leaf_ids[id(node)] = len(self._leaves)
                self._leaves.append(node)
            else:
                stack.append(node.right)
                stack.append(node.left)
        self._leaf_counts = np.array([lf.counts for lf in self._leaves], dtype=np.int64)
        self._leaf_labels = np.array([lf.label for lf in self._leaves], dtype=np.int64)

    @property
    def leaves(self) -> list:
        return list(self._leaves)

    @property
    def leaf_counts(self) -> np.ndarray:
        return self._leaf_counts

    @property
    def leaf_labels(self) -> np.ndarray:
        return self._leaf_labels

    def depth(self) -> int:
        def d(n):
            return 0 if isinstance(n, Leaf) else 1 + max(d(n.left), d(n.right))
        return d(self.root)

    def features_used(self) -> set:
        out, stack = set(), [self.root]
        while stack:
            n = stack.pop()
            if isinstance(n, Internal):
                out.add(n.feature)
                stack.extend((n.left, n.right))
        return out

    def route(self, X) -> tuple[np.ndarray, np.ndarray]:
        """Leaf index reached by each row and the (n, m) mask of features read."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ValueError(f"expected an (n, {self.n_features}) matrix, got shape {X.shape}")
        n = len(X)
        leaf_of = np.empty(n, dtype=np.int64)
        used = np.zeros((n, self.n_features), dtype=bool)
        stack = [(self.root, np.arange(n))]
        while stack:
            node, idx = stack.pop()
            if not len(idx):
                continue
            if isinstance(node, Leaf):
                leaf_of[idx] = self._leaf_ids[id(node)]
                continue
            used[idx, node.feature] = True
            go_right = X[idx, node.feature] > node.stump.threshold
            stack.append((node.left, idx[~go_right]))
            stack.append((node.right, idx[go_right]))
        return leaf_of, used

    def predict(self, X) -> np.ndarray:
        return self._leaf_labels[self.route(X)[0]]

    def feature_mask(self, X) -> np.ndarray:
        return self.route(X)[1]

    def example_costs(self, X, costs=None) -> np.ndarray:
        c = np.asarray(self.costs if costs is None else costs, dtype=np.float64)
        return self.feature_mask(X) @ c

    def max_cost(self, X, costs=None) -> float:
        if len(X) == 0:
            raise ValueError("max_cost needs a non-empty example set")
        return float(self.example_costs(X, costs).max())

    def truncate(self, depth: int) -> "Tree":
        """The same tree with every node at ``depth`` turned into a majority leaf."""
        def cut(node, d):
            if isinstance(node, Leaf):
                return node
            if d >= depth:
                return Leaf.from_counts(node.counts)
            return Internal(node.stump, node.counts, cut(node.left, d + 1), cut(node.right, d + 1))
        return Tree(cut(self.root, 0), self.spec, self.costs, self.n_features, self.n_classes)

    def to_dict(self) -> dict:
        return {
            "format": TREE_FORMAT,
            "version": FORMAT_VERSION,
            "impurity": self.spec.to_dict(),
            "costs": list(self.costs),
            "n_features": self.n_features,
            "n_classes": self.n_classes,
            "root": node_to_dict(self.root),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        if not isinstance(d, dict) or d.get("format") != TREE_FORMAT:
            raise ModelFormatError("not a serialized tree")
        if d.get("version") != FORMAT_VERSION:
            raise ModelVersionError(
                f"tree format version {d.get('version')!r} unsupported (expected {FORMAT_VERSION})")
        try:
            return cls(node_from_dict(d["root"]), ImpuritySpec.from_dict(d["impurity"]),
                       tuple(d["costs"]), int(d["n_features"]), int(d["n_classes"]))
        except (KeyError, TypeError, ValueError) as e:
            raise ModelFormatError(f"malformed tree record: {e}") from e

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def loads(cls, text: str) -> "Tree":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as e:
            raise ModelFormatError(f"tree record is not valid JSON: {e}") from e
        return cls.from_dict(d)


def node_to_dict(node: Node) -> dict:
    if isinstance(node, Leaf):
        return {"counts": list(node.counts), "label": node.label}
    return {
        "feature": node.feature,
        "threshold": node.stump.threshold,
        "counts": list(node.counts),
        "left": node_to_dict(node.left),
        "right": node_to_dict(node.right),
    }


def node_from_dict(d: dict) -> Node:
    if "feature" in d:
        return Internal(Stump(int(d["feature"]), float(d["threshold"])),
                        tuple(int(c) for c in d["counts"]),
                        node_from_dict(d["left"]), node_from_dict(d["right"]))
    return Leaf(tuple(int(c) for c in d["counts"]), int(d["label"]))


def classify(tree: Tree, x) -> tuple[int, frozenset]:
    """Predicted class and the set of distinct features read for one example."""
    x = np.asarray(x, dtype=np.float64)
    node, seen = tree.root, set()
    while isinstance(node, Internal):
        seen.add(node.feature)
        node = node.right if x[node.feature] > node.stump.threshold else node.left
    return node.label, frozenset(seen)


def example_cost(tree: Tree, x, costs=None) -> float:
    c = tree.costs if costs is None else costs
    return float(sum(c[t] for t in classify(tree, x)[1]))


def max_cost(tree: Tree, X, costs=None) -> float:
    return tree.max_cost(X, costs)


def grow_tree(X, y, spec: ImpuritySpec, costs, *, n_classes=None, search=None, rng=None,
              max_depth: int = DEFAULT_MAX_DEPTH) -> Tree:
    """Grow one tree greedily on ``(X, y)``.

    ``search(X, idx, feature, rng)`` supplies the candidate stumps for a
    feature at a node; random stumps per the default policy when omitted.
    Growth stops at a node when its impurity is zero, when every feature has
    infinite risk, or at ``max_depth``; the last two cases yield a majority
    leaf whose impurity may be positive.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or len(X) != len(y):
        raise ValueError("X must be (n, m) with one label per row")
    if len(y) == 0:
        raise ValueError("cannot grow a tree on an empty example set")
    m = X.shape[1]
    c = _as_costs(costs, m)
    if n_classes is None:
        n_classes = int(y.max()) + 1
    if y.min() < 0 or y.max() >= n_classes:
        raise ValueError("labels must lie in 0..n_classes-1")
    search = search if search is not None else RandomStumps()
    rng = np.random.default_rng(rng)
    depth_hits = 0

    def build(idx, depth):
        nonlocal depth_hits
        counts = _class_counts(y, idx, n_classes)
        f_s = impurity(spec, counts)
        if f_s == 0:
            return Leaf.from_counts(counts)
        if depth >= max_depth:
            depth_hits += 1
            return Leaf.from_counts(counts)
        best_r, best_stump = math.inf, None
        for t in range(m):
            cands = search(X, idx, t, rng)
            r, stump = risk(cands, X, y, idx, spec, c[t], n_classes, f_s)
            if r < best_r:
                best_r, best_stump = r, stump
        if best_stump is None:
            return Leaf.from_counts(counts)
        go_right = X[idx, best_stump.feature] > best_stump.threshold
        left = build(idx[~go_right], depth + 1)
        right = build(idx[go_right], depth + 1)
        return Internal(best_stump, tuple(int(v) for v in counts), left, right)

    root = build(np.arange(len(y)), 0)
    if depth_hits:
        log = logger.warning if max_depth == DEFAULT_MAX_DEPTH else logger.info
        log("depth limit %d reached at %d node(s); forced majority leaves", max_depth, depth_hits)
    return Tree(root, spec, tuple(c), m, n_classes)
