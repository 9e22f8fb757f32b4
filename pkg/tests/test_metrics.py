import math

import numpy as np
import pytest

from budgetrf._random import SWEEP_STREAM, derive_seed
from budgetrf.dataio import Dataset
from budgetrf.forest import BudgetConfig, Forest, grow_forest
from budgetrf.impurity import ImpuritySpec
from budgetrf.metrics import (
    CURVE_COLUMNS,
    DEFAULT_ALPHAS,
    CurvePoint,
    QueryGroup,
    aggregate,
    average_precision_at_5,
    avg_feature_fraction,
    precision_at_5,
    query_groups,
    select_alpha,
    sweep_alpha,
    test_error,
    write_curve,
)
from budgetrf.stumps import ExhaustiveStumps
from budgetrf.synthetic import redundant_cost, synthetic_1024
from budgetrf.tree import Leaf, Tree, grow_tree


def ap5_by_definition(relevance_in_rank_order):
    top = list(relevance_in_rank_order)[:5]
    for j, r in enumerate(top, start=1):
        if r != 1:
            return (j - 1) / 5
    return 1.0


def group(relevance):
    # confidences strictly decreasing, so rank order is list order
    n = len(relevance)
    return QueryGroup("q", np.array(relevance), np.linspace(1, 0, n))


@pytest.mark.parametrize("rel, expected", [
    ([1, 1, 1, 1, 1, 0], 1.0),
    ([0, 1, 1, 1, 1], 0.0),
    ([1, 1, 0, 1, 1], 0.4),
    ([1, 1], 1.0),
])
def test_ap5_scores(rel, expected):
    assert precision_at_5(group(rel)) == expected == ap5_by_definition(rel)


def test_ap5_uses_confidence_order_and_averages():
    qids = np.array(["a", "a", "a", "b", "b"])
    rel = np.array([0, 1, 1, 1, 0])
    conf = np.array([0.1, 0.9, 0.5, 0.2, 0.8])
    groups = query_groups(qids, rel, conf)
    assert [g.query_id for g in groups] == ["a", "b"]
    # a ranks (1,1,0) -> 0.4 ; b ranks (0,1) -> 0
    assert average_precision_at_5(groups) == pytest.approx(0.2)
    again = query_groups(qids, rel, np.exp(3 * conf) + 7)
    assert average_precision_at_5(again) == average_precision_at_5(groups)
    with pytest.raises(ValueError):
        average_precision_at_5([])


def test_ap5_ties_keep_input_order():
    g = QueryGroup("q", np.array([1, 0, 1]), np.array([0.5, 0.5, 0.5]))
    assert precision_at_5(g) == 0.2


def one_tree_forest(tree):
    return Forest([tree], tree.spec, tree.costs, tree.n_features, tree.n_classes)


def test_error_and_fraction_examples():
    data = synthetic_1024()
    full = grow_tree(data.X, data.y, ImpuritySpec(), np.ones(10), search=ExhaustiveStumps())
    assert test_error(one_tree_forest(full), data) == 0.0
    assert test_error(one_tree_forest(full.truncate(2)), data) == pytest.approx(4 / 1024)
    leaf = Tree(Leaf.from_counts((3, 1)), ImpuritySpec(), (1.0,) * 10, 10, 4)
    assert avg_feature_fraction(one_tree_forest(leaf), data) == 0.0
    xor = Dataset(np.array([[0, 0], [0, 1], [1, 0], [1, 1]]), np.array([0, 1, 1, 0]), 2)
    both = grow_tree(xor.X, xor.y, ImpuritySpec(), [1, 1], search=ExhaustiveStumps())
    assert avg_feature_fraction(one_tree_forest(both), xor) == 1.0
    balanced = Dataset(data.X[:4], np.array([0, 1, 0, 1]), 2)
    const = Tree(Leaf.from_counts((3, 1)), ImpuritySpec(), (1.0,) * 10, 10, 2)
    assert test_error(one_tree_forest(const), balanced) == 0.5


def test_default_alphas():
    assert DEFAULT_ALPHAS == (0, 2, 4, 6, 8, 10, 15, 25, 35, 45)


def splits(seed):
    data, costs = redundant_cost(seed, n=300)
    idx = np.random.default_rng(seed).permutation(data.n)
    return data.subset(idx[:150]), data.subset(idx[150:225]), data.subset(idx[225:]), costs


def test_sweep_single_alpha_single_tree():
    train, val, test, costs = splits(0)
    res = sweep_alpha(train, val, test, [0], BudgetConfig(math.inf, max_trees=1), costs)
    assert len(res.points) == 1 and res.points[0].trees == 1


def test_sweep_prefix_costs_nondecreasing_and_row_count():
    train, val, test, costs = splits(1)
    res = sweep_alpha(train, val, test, [0, 8], BudgetConfig(300.0, max_trees=5, seed=2), costs,
                      repeats=2)
    for r in range(2):
        for a in (0, 8):
            seq = [p.avg_cost for p in res.points if p.alpha == a and p.repeat == r]
            assert seq == sorted(seq) and 1 <= len(seq) <= 5
            assert all(p.val_cost <= 300 for p in res.points if p.alpha == a and p.repeat == r)
    rows = aggregate(res.points)
    assert len(rows) == len({(p.alpha, p.trees) for p in res.points})


def test_prefix_points_match_prefix_forests():
    train, val, test, costs = splits(3)
    res = sweep_alpha(train, val, test, [4], BudgetConfig(math.inf, max_trees=4, seed=5), costs)
    f = grow_forest(train, val, BudgetConfig(math.inf, max_trees=4,
                                             seed=derive_seed(5, SWEEP_STREAM, 0, 0)),
                    ImpuritySpec.pairs(4), costs)
    for p in res.points:
        g = f.prefix(p.trees)
        assert p.avg_cost == pytest.approx(g.average_cost(test.X))
        assert p.error == pytest.approx(test_error(g, test))
        assert p.val_cost == pytest.approx(g.average_cost(val.X))


def test_repeats_one_gives_zero_std(tmp_path):
    pts = [CurvePoint(0, 1, 2.0, 0.1, 1.0, 0.2), CurvePoint(0, 2, 3.0, 0.05, 1.5, 0.1)]
    rows = aggregate(pts)
    assert all(r["avg_cost_std"] == 0 and r["error_std"] == 0 for r in rows)
    out = tmp_path / "c.csv"
    write_curve(rows, out)
    lines = out.read_text().splitlines()
    assert lines[0].split(",") == list(CURVE_COLUMNS) and len(lines) == 3


def test_select_alpha():
    pts = [CurvePoint(0, 1, 5, 0.3, 5, 0.3), CurvePoint(8, 1, 2, 0.2, 2, 0.2),
           CurvePoint(8, 2, 4, 0.1, 4, 0.1)]
    sel = select_alpha(pts, [1, 3, 10])
    assert [(s.budget, s.alpha, s.trees) for s in sel] == [(3, 8, 1), (10, 8, 2)]


def test_budget_forest_reads_fewer_features_than_control():
    train, val, test, costs = splits(4)
    cfg = BudgetConfig(math.inf, max_trees=10, seed=1)
    budget = grow_forest(train, val, cfg, ImpuritySpec(), costs)
    control = grow_forest(train, val, cfg, ImpuritySpec(), np.ones_like(costs))
    assert avg_feature_fraction(budget, test) < avg_feature_fraction(control, test)
