import numpy as np
import pytest

from budgetrf.stumps import (
    ExhaustiveStumps,
    Stump,
    StumpBudgetPolicy,
    exhaustive_candidates,
    generate_candidates,
    split,
)
from budgetrf.synthetic import two_stump_toy


@pytest.mark.parametrize("n, expected", [
    (1, 20), (100, 20), (499, 20), (500, 40), (600, 40), (2000, 40), (2001, 80),
])
def test_candidate_counts(n, expected):
    X = np.random.default_rng(0).random((n, 2))
    assert len(generate_candidates(X, np.arange(n), 1, rng=0)) == expected
    assert StumpBudgetPolicy().n_candidates(n) == expected


def test_thresholds_within_node_range_and_deterministic():
    X = np.random.default_rng(3).normal(size=(300, 3))
    idx = np.arange(0, 300, 3)
    a = generate_candidates(X, idx, 2, rng=np.random.default_rng(11))
    b = generate_candidates(X, idx, 2, rng=np.random.default_rng(11))
    assert a == b
    lo, hi = X[idx, 2].min(), X[idx, 2].max()
    assert all(lo <= s.threshold <= hi and s.feature == 2 for s in a)


def test_constant_feature_gives_degenerate_splits():
    X = np.full((50, 1), 5.0)
    idx = np.arange(50)
    for s in generate_candidates(X, idx, 0, rng=1):
        left, right = split(s, X, idx)
        assert len(left) == 50 and len(right) == 0
    assert exhaustive_candidates(X, idx, 0) == []


def test_empty_node_rejected():
    with pytest.raises(ValueError):
        generate_candidates(np.zeros((3, 1)), np.array([], dtype=int), 0)


def test_split_extremes_and_partition():
    X = np.arange(10.0).reshape(-1, 1)
    idx = np.arange(10)
    left, right = split(Stump(0, -1.0), X, idx)
    assert len(left) == 0 and len(right) == 10
    left, right = split(Stump(0, 100.0), X, idx)
    assert len(left) == 10 and len(right) == 0
    left, right = split(Stump(0, 4.0), X, idx)  # boundary value goes to outcome 0
    assert 4 in left and set(left) | set(right) == set(idx) and not set(left) & set(right)


def test_toy_first_feature_split():
    data, fam = two_stump_toy()
    left, right = split(fam[0][0], data.X, np.arange(data.n))
    assert list(np.bincount(data.y[left], minlength=2)) == [30, 10]
    assert list(np.bincount(data.y[right], minlength=2)) == [0, 20]


def test_exhaustive_midpoints():
    X = np.array([[0.0], [1.0], [1.0], [3.0]])
    got = ExhaustiveStumps()(X, np.arange(4), 0, None)
    assert [s.threshold for s in got] == [0.5, 2.0]
