import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from budgetrf.dataio import (
    Dataset,
    dedup,
    load_costs,
    load_csv,
    load_index_file,
    load_label_map,
    load_matrix,
    load_model,
    quantize,
    save_model,
    split_indices,
    write_costs,
    write_csv,
)
from budgetrf.errors import DataError, ModelFormatError, ModelVersionError
from budgetrf.forest import Forest
from budgetrf.impurity import ImpuritySpec
from budgetrf.stumps import Stump
from budgetrf.tree import Internal, Leaf, Tree


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_labels_remapped_to_contiguous(tmp_path):
    p = write(tmp_path, "d.csv", "a,b,y\n1,2,5\n3,4,7\n5,6,5\n")
    d = load_csv(p)
    assert list(d.y) == [0, 1, 0] and d.label_values == ("5", "7")
    assert d.feature_names == ("a", "b") and d.X.shape == (3, 2)


def test_numeric_label_order_and_shared_encoding(tmp_path):
    d = load_csv(write(tmp_path, "d.csv", "x,y\n0,10\n1,9\n2,10\n"))
    assert d.label_values == ("9", "10")
    e = load_csv(write(tmp_path, "e.csv", "x,y\n0,10\n"), label_values=d.label_values)
    assert list(e.y) == [1]
    with pytest.raises(DataError):
        load_csv(write(tmp_path, "f.csv", "x,y\n0,11\n1,9\n"), label_values=d.label_values)


def test_header_options(tmp_path):
    p = write(tmp_path, "d.csv", "1,0,3\n2,1,4\n")
    d = load_csv(p, header=False, label_column=1)
    assert d.X.tolist() == [[1, 3], [2, 4]] and d.feature_names == ("f0", "f1")
    q = write(tmp_path, "q.csv", "f,label,qid\n1,0,a\n2,1,a\n3,1,b\n")
    d = load_csv(q, label_column="label", query_column="qid")
    assert list(d.query_ids) == ["a", "a", "b"] and d.m == 1


def test_ragged_row_reports_line(tmp_path):
    lines = ["a,b,y"] + [f"{i},{i},{i % 2}" for i in range(10)] + ["1,2"]
    p = write(tmp_path, "d.csv", "\n".join(lines) + "\n")
    with pytest.raises(DataError) as e:
        load_csv(p)
    assert e.value.line == 12 and ":12:" in str(e.value)


def test_bad_values(tmp_path):
    with pytest.raises(DataError):
        load_csv(write(tmp_path, "a.csv", "x,y\nfoo,1\n2,0\n"))
    with pytest.raises(DataError):
        load_csv(write(tmp_path, "b.csv", "x,y\n1,1\n2,1\n"))
    with pytest.raises(DataError):
        load_csv(write(tmp_path, "c.csv", "x,y\n"))
    with pytest.raises(DataError):
        load_csv(tmp_path / "missing.csv")
    with pytest.raises(DataError):
        load_csv(write(tmp_path, "d.csv", "x,y\n1,1\n2,0\n"), label_column="z")


def test_label_map(tmp_path):
    m = load_label_map(write(tmp_path, "m.csv", "cat,animal\ndog,animal\n"))
    d = load_csv(write(tmp_path, "d.csv", "x,y\n1,cat\n2,dog\n3,car\n"), label_map=m)
    assert d.label_values == ("animal", "car") and list(d.y) == [0, 0, 1]


def test_costs(tmp_path):
    assert load_costs(write(tmp_path, "c", "1\n5\n20\n")).tolist() == [1, 5, 20]
    assert load_costs(write(tmp_path, "c2", "1,2,3\n"), m=3).tolist() == [1, 2, 3]
    assert load_costs(m=4, uniform=True).tolist() == [1, 1, 1, 1]
    with pytest.raises(DataError) as e:
        load_costs(write(tmp_path, "c3", "1\n-1\n"))
    assert e.value.line == 2
    for text in ("0\n", "x\n", "", "1\n2\n"):
        with pytest.raises(DataError):
            load_costs(write(tmp_path, "c4", text), m=3)
    with pytest.raises(DataError):
        load_costs()
    p = tmp_path / "out.costs"
    write_costs([1.0, 2.5, 100.0], p)
    assert load_costs(p).tolist() == [1.0, 2.5, 100.0]


def test_quantize_examples():
    d = Dataset(np.array([[0.0], [5.0], [10.0]]), np.array([0, 1, 0]), 2)
    assert quantize(d).X.ravel().tolist() == [0, 5, 9]
    c = Dataset(np.full((3, 1), 4.0), np.array([0, 1, 0]), 2)
    assert quantize(c).X.ravel().tolist() == [0, 0, 0]


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, st.integers(2, 40), elements=st.floats(-1e6, 1e6)), st.integers(2, 12))
def test_quantize_monotone_and_in_range(v, levels):
    d = Dataset(v[:, None], np.arange(len(v)) % 2, 2)
    q = quantize(d, levels).X.ravel()
    assert q.min() >= 0 and q.max() <= levels - 1
    order = np.argsort(v, kind="stable")
    assert np.all(np.diff(q[order]) >= 0)


def test_dedup_majority_and_idempotent():
    X = np.array([[1.0, 1.0], [0.0, 0.0], [1.0, 1.0], [1.0, 1.0], [2.0, 0.0]])
    d = Dataset(X, np.array([1, 0, 2, 1, 0]), 3)
    out = dedup(d)
    assert out.X.tolist() == [[1, 1], [0, 0], [2, 0]]
    assert out.y.tolist() == [1, 0, 0]
    again = dedup(out)
    assert np.array_equal(again.X, out.X) and np.array_equal(again.y, out.y)
    tie = dedup(Dataset(np.zeros((2, 1)), np.array([1, 0]), 2))
    assert tie.y.tolist() == [0]


def test_csv_roundtrip(tmp_path):
    X = np.array([[0.5, 2.0], [1.0, -3.25]])
    d = Dataset(X, np.array([1, 0]), 2, ("a", "b"), ("neg", "pos"), np.array(["q1", "q2"]))
    p = tmp_path / "d.csv"
    write_csv(d, p)
    e = load_csv(p, label_column="label", query_column="query", label_values=d.label_values)
    assert np.array_equal(e.X, d.X) and np.array_equal(e.y, d.y)
    assert list(e.query_ids) == ["q1", "q2"]
    assert np.array_equal(load_matrix(p, drop_columns=("label", "query")), X)


def test_splits_and_index_files(tmp_path):
    parts = split_indices(100, (0.5, 0.25, 0.25), rng=0)
    assert [len(p) for p in parts] == [50, 25, 25]
    assert sorted(np.concatenate(parts).tolist()) == list(range(100))
    assert load_index_file(write(tmp_path, "i", "3\n1\n"), 5).tolist() == [3, 1]
    with pytest.raises(DataError):
        load_index_file(write(tmp_path, "j", "9\n"), 5)


def small_forest():
    root = Internal(Stump(0, 0.5), (1, 1), Leaf.from_counts((1, 0)), Leaf.from_counts((0, 1)))
    t = Tree(root, ImpuritySpec.pairs(4), (2.0,), 1, 2)
    return Forest([t], ImpuritySpec.pairs(4), (2.0,), 1, 2, budget=3.0, seed=5)


def test_model_roundtrip(tmp_path):
    f = small_forest()
    p = tmp_path / "m.json"
    save_model(f, p)
    g = load_model(p)
    assert g.dumps() == f.dumps() and g.budget == 3.0 and g.seed == 5


def test_model_errors(tmp_path):
    with pytest.raises(ModelFormatError):
        load_model(write(tmp_path, "empty.json", ""))
    with pytest.raises(ModelFormatError):
        load_model(write(tmp_path, "cut.json", small_forest().dumps()[:40]))
    with pytest.raises(ModelVersionError):
        load_model(write(tmp_path, "v.json", small_forest().dumps().replace('"version": 1', '"version": 7')))
    with pytest.raises(ModelFormatError):
        load_model(tmp_path / "nope.json")


def test_dataset_validation():
    with pytest.raises(ValueError):
        Dataset(np.zeros((2, 1)), np.array([0, 2]), 2)
    with pytest.raises(ValueError):
        Dataset(np.zeros((2, 1)), np.array([0, 0]), 1)
    with pytest.raises(ValueError):
        Dataset(np.zeros(2), np.array([0, 1]), 2)
