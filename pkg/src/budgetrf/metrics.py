"""Error, acquisition cost, feature fraction, AP@5 and accuracy-cost sweeps."""

from __future__ import annotations

import csv
import logging
import sys
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from ._random import SWEEP_STREAM, derive_seed
from .dataio import Dataset
from .forest import BudgetConfig, Forest, grow_forest, mean_cost
from .impurity import ImpuritySpec

logger = logging.getLogger(__name__)

DEFAULT_ALPHAS = (0, 2, 4, 6, 8, 10, 15, 25, 35, 45)


def test_error(forest: Forest, data: Dataset) -> float:
    return float(np.mean(forest.predict(data.X) != data.y))


test_error.__test__ = False  # keep pytest from collecting it when imported


def avg_feature_fraction(forest: Forest, data: Dataset) -> float:
    """Mean over examples of the fraction of features the forest reads."""
    return float(forest.feature_mask(data.X).sum(axis=1).mean() / forest.n_features)


@dataclass(frozen=True)
class QueryGroup:
    query_id: object
    relevance: np.ndarray
    confidence: np.ndarray


def query_groups(query_ids, relevance, confidence) -> list[QueryGroup]:
    """Group documents by query id, in order of first appearance."""
    query_ids = np.asarray(query_ids)
    relevance = np.asarray(relevance)
    confidence = np.asarray(confidence, dtype=np.float64)
    _, first, inv = np.unique(query_ids, return_index=True, return_inverse=True)
    out = []
    for g in np.argsort(first, kind="stable"):
        rows = np.flatnonzero(inv.ravel() == g)
        out.append(QueryGroup(query_ids[rows[0]], relevance[rows], confidence[rows]))
    return out


def precision_at_5(group: QueryGroup) -> float:
    order = np.argsort(-group.confidence, kind="stable")
    top = np.asarray(group.relevance)[order][:5]
    bad = np.flatnonzero(top != 1)
    if not len(bad):
        return 1.0
    return float(bad[0]) / 5.0


def average_precision_at_5(groups) -> float:
    """Mean per-query score: 1 if the top five (or all, if fewer) are relevant,
    else ``(j - 1) / 5`` with ``j`` the 1-based rank of the first irrelevant one."""
    groups = list(groups)
    if not groups:
        raise ValueError("no query groups")
    return float(np.mean([precision_at_5(g) for g in groups]))


@dataclass(frozen=True)
class CurvePoint:
    alpha: float
    trees: int
    avg_cost: float
    error: float
    val_cost: float = float("nan")
    val_error: float = float("nan")
    metric: Optional[float] = None
    repeat: int = 0


@dataclass
class SweepResult:
    points: list
    # (alpha, repeat, validation cost of the rejected first tree)
    infeasible: list


def prefix_points(forest: Forest, validation: Dataset, test: Dataset, alpha, repeat=0) -> list:
    """One curve point per tree-count prefix, evaluated incrementally."""
    pts = []
    c = np.asarray(forest.costs)
    binary = forest.n_classes == 2 and test.query_ids is not None
    vu = np.zeros((validation.n, forest.n_features), dtype=bool)
    tu = np.zeros((test.n, forest.n_features), dtype=bool)
    vv = np.zeros((validation.n, forest.n_classes), dtype=np.int64)
    tv = np.zeros((test.n, forest.n_classes), dtype=np.int64)
    tl = np.zeros((test.n, forest.n_classes), dtype=np.int64)
    vr, tr = np.arange(validation.n), np.arange(test.n)
    for j, tree in enumerate(forest.trees, start=1):
        leaf_v, mask_v = tree.route(validation.X)
        leaf_t, mask_t = tree.route(test.X)
        vu |= mask_v
        tu |= mask_t
        vv[vr, tree.leaf_labels[leaf_v]] += 1
        tv[tr, tree.leaf_labels[leaf_t]] += 1
        metric = None
        if binary:
            tl += tree.leaf_counts[leaf_t]
            conf = tl[:, 1] / tl.sum(axis=1)
            metric = average_precision_at_5(query_groups(test.query_ids, test.y, conf))
        pts.append(CurvePoint(
            alpha=alpha, trees=j,
            avg_cost=mean_cost(tu, c), error=float(np.mean(tv.argmax(axis=1) != test.y)),
            val_cost=mean_cost(vu, c), val_error=float(np.mean(vv.argmax(axis=1) != validation.y)),
            metric=metric, repeat=repeat))
    return pts


def sweep_alpha(train: Dataset, validation: Dataset, test: Dataset, alphas, config: BudgetConfig,
                costs, search=None, repeats: int = 1,
                make_spec: Callable[[int], ImpuritySpec] = ImpuritySpec.pairs) -> SweepResult:
    """Train one forest per (repeat, alpha) and emit a point per tree-count prefix.

    Forest seeds derive from ``config.seed`` per (repeat, alpha index).
    Budget-infeasible cells are recorded and skipped.
    """
    alphas = list(alphas)
    if not alphas:
        raise ValueError("need at least one alpha")
    points, infeasible = [], []
    for r in range(repeats):
        for a_idx, alpha in enumerate(alphas):
            seed = derive_seed(config.seed, SWEEP_STREAM, r, a_idx)
            forest = grow_forest(train, validation, replace(config, seed=seed), make_spec(alpha),
                                 costs, search)
            if forest.budget_infeasible:
                infeasible.append((alpha, r, forest.infeasible_cost))
                continue
            points.extend(prefix_points(forest, validation, test, alpha, r))
            logger.info("alpha=%s repeat=%d: %d trees", alpha, r, len(forest))
    return SweepResult(points, infeasible)


@dataclass(frozen=True)
class Selection:
    budget: float
    alpha: float
    trees: int
    val_cost: float
    val_error: float
    avg_cost: float
    error: float


def select_alpha(points, budgets) -> list[Selection]:
    """Per budget, the point of least validation error among those within budget.

    Ties prefer the cheaper point, then the smaller alpha.
    """
    out = []
    for b in budgets:
        ok = [p for p in points if p.val_cost <= b]
        if not ok:
            continue
        best = min(ok, key=lambda p: (p.val_error, p.val_cost, p.alpha, p.trees))
        out.append(Selection(b, best.alpha, best.trees, best.val_cost, best.val_error,
                             best.avg_cost, best.error))
    return out


def aggregate(points) -> list[dict]:
    """Mean and population std over repeats for each (alpha, trees)."""
    groups: dict = {}
    for p in points:
        groups.setdefault((p.alpha, p.trees), []).append(p)
    rows = []
    for (alpha, trees), ps in groups.items():
        row = {"alpha": alpha, "trees": trees, "runs": len(ps)}
        for key in ("avg_cost", "error", "val_cost", "val_error"):
            v = np.array([getattr(p, key) for p in ps], dtype=np.float64)
            row[key], row[key + "_std"] = float(v.mean()), float(v.std())
        m = [p.metric for p in ps if p.metric is not None]
        row["metric"] = float(np.mean(m)) if m else None
        row["metric_std"] = float(np.std(m)) if m else None
        rows.append(row)
    return rows


CURVE_COLUMNS = ("alpha", "trees", "avg_cost", "error", "metric",
                 "avg_cost_std", "error_std", "metric_std", "val_cost", "val_error", "runs")


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_curve(rows, out=None) -> None:
    """CSV with the columns of :data:`CURVE_COLUMNS`; ``out`` is a path or stdout."""
    fh = sys.stdout if out in (None, "-") else open(out, "w", newline="")
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CURVE_COLUMNS)
        for r in rows:
            w.writerow([_fmt(r.get(c)) for c in CURVE_COLUMNS])
    finally:
        if fh is not sys.stdout:
            fh.close()
