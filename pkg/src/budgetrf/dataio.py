"""Datasets, CSV and cost-file ingestion, preprocessing, splits, model files."""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DataError, ModelFormatError, ModelVersionError


@dataclass(frozen=True)
class Dataset:
    """Feature matrix with contiguous integer labels ``0..n_classes-1``.

    ``label_values`` keeps the original label tokens so reports can map back.
    ``query_ids`` is optional per-row grouping used by ranking metrics.
    """

    X: np.ndarray
    y: np.ndarray
    n_classes: int
    feature_names: tuple = None
    label_values: tuple = None
    query_ids: np.ndarray = field(default=None, compare=False)

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.int64)
        if X.ndim != 2:
            raise DataError(f"feature matrix must be 2-D, got shape {X.shape}")
        n, m = X.shape
        if n < 1 or m < 1:
            raise DataError(f"dataset needs n >= 1 rows and m >= 1 features, got {X.shape}")
        if y.shape != (n,):
            raise DataError(f"expected {n} labels, got shape {y.shape}")
        if self.n_classes < 2:
            raise DataError(f"need at least 2 classes, got {self.n_classes}")
        if y.min() < 0 or y.max() >= self.n_classes:
            raise DataError("labels outside 0..n_classes-1")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        if self.feature_names is None:
            object.__setattr__(self, "feature_names", tuple(f"f{j}" for j in range(m)))
        elif len(self.feature_names) != m:
            raise DataError(f"{len(self.feature_names)} feature names for {m} features")
        if self.label_values is None:
            object.__setattr__(self, "label_values", tuple(str(i) for i in range(self.n_classes)))
        if self.query_ids is not None:
            q = np.asarray(self.query_ids)
            if q.shape != (n,):
                raise DataError("query_ids must have one entry per row")
            object.__setattr__(self, "query_ids", q)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def m(self) -> int:
        return self.X.shape[1]

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=np.int64)
        return replace(self, X=self.X[idx], y=self.y[idx],
                       query_ids=None if self.query_ids is None else self.query_ids[idx])


def _label_key(tok: str):
    try:
        return (0, float(tok), tok)
    except ValueError:
        return (1, 0.0, tok)


def _resolve_column(spec, header, ncols, path):
    if spec is None:
        return ncols - 1
    if isinstance(spec, int) or (isinstance(spec, str) and spec.lstrip("-").isdigit()):
        j = int(spec)
        if j < 0:
            j += ncols
        if not 0 <= j < ncols:
            raise DataError(f"column index {spec} out of range for {ncols} columns", path)
        return j
    if header is None:
        raise DataError(f"column {spec!r} selected by name but the file has no header", path)
    if spec not in header:
        raise DataError(f"unknown column {spec!r}; header is {header}", path)
    return header.index(spec)


def load_csv(path, label_column=None, header=True, query_column=None, label_map=None,
             label_values=None) -> Dataset:
    """Read a numeric CSV with one label column.

    ``label_column``/``query_column`` are a header name or a zero-based index
    (default label column: the last one).  Labels are remapped to contiguous
    integers in sorted order of the original tokens, after applying the
    optional ``label_map`` (original token -> merged token).  Passing the
    ``label_values`` of another dataset reuses its encoding instead, so that
    train, validation and test files agree.
    """
    try:
        fh = open(path, newline="")
    except OSError as e:
        raise DataError(f"cannot open: {e.strerror}", path) from e
    with fh:
        reader = csv.reader(fh)
        rows, names, width = [], None, None
        for lineno, row in enumerate(reader, start=1):
            if not row or all(not c.strip() for c in row):
                continue
            row = [c.strip() for c in row]
            if header and names is None:
                names, width = row, len(row)
                continue
            if width is None:
                width = len(row)
            if len(row) != width:
                raise DataError(f"ragged row: expected {width} fields, got {len(row)}", path, lineno)
            rows.append((lineno, row))
    if not rows:
        raise DataError("no data rows", path)
    lab = _resolve_column(label_column, names, width, path)
    qcol = None if query_column is None else _resolve_column(query_column, names, width, path)
    if qcol == lab:
        raise DataError("query column and label column must differ", path)
    fcols = [j for j in range(width) if j not in (lab, qcol)]
    if not fcols:
        raise DataError("no feature columns", path)
    X = np.empty((len(rows), len(fcols)), dtype=np.float64)
    labels, qids = [], []
    for i, (lineno, row) in enumerate(rows):
        for jj, j in enumerate(fcols):
            try:
                X[i, jj] = float(row[j])
            except ValueError:
                raise DataError(f"non-numeric value {row[j]!r} in column {j}", path, lineno) from None
        tok = row[lab]
        if label_map is not None:
            tok = label_map.get(tok, tok)
        labels.append(tok)
        if qcol is not None:
            qids.append(row[qcol])
    if label_values is None:
        values = tuple(sorted(set(labels), key=_label_key))
    else:
        values = tuple(label_values)
        unknown = sorted(set(labels) - set(values), key=_label_key)
        if unknown:
            raise DataError(f"labels {unknown} not in the known label set {list(values)}", path)
    code = {v: i for i, v in enumerate(values)}
    y = np.array([code[t] for t in labels], dtype=np.int64)
    if len(values) < 2:
        raise DataError(f"need at least 2 distinct labels, found {list(values)}", path)
    fnames = tuple(names[j] for j in fcols) if names else None
    return Dataset(X, y, len(values), fnames, values,
                   np.array(qids) if qcol is not None else None)


def load_matrix(path, header=True, drop_columns=()) -> np.ndarray:
    """Numeric CSV without labels; ``drop_columns`` are names or indices to skip."""
    try:
        fh = open(path, newline="")
    except OSError as e:
        raise DataError(f"cannot open: {e.strerror}", path) from e
    with fh:
        names, width, rows = None, None, []
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if header and names is None:
                names, width = [c.strip() for c in row], len(row)
                continue
            width = len(row) if width is None else width
            if len(row) != width:
                raise DataError(f"ragged row: expected {width} fields, got {len(row)}", path, lineno)
            rows.append((lineno, row))
    if not rows:
        raise DataError("no data rows", path)
    skip = {_resolve_column(c, names, width, path) for c in drop_columns}
    cols = [j for j in range(width) if j not in skip]
    X = np.empty((len(rows), len(cols)))
    for i, (lineno, row) in enumerate(rows):
        for jj, j in enumerate(cols):
            try:
                X[i, jj] = float(row[j])
            except ValueError:
                raise DataError(f"non-numeric value {row[j]!r} in column {j}", path, lineno) from None
    return X


def write_csv(data: Dataset, path, label_name="label", query_name="query") -> None:
    """Write features, then the original label tokens (and query ids) with a header."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        head = list(data.feature_names) + [label_name]
        if data.query_ids is not None:
            head.append(query_name)
        w.writerow(head)
        for i in range(data.n):
            row = [repr(float(v)) if not float(v).is_integer() else str(int(v)) for v in data.X[i]]
            row.append(data.label_values[data.y[i]])
            if data.query_ids is not None:
                row.append(str(data.query_ids[i]))
            w.writerow(row)


def load_label_map(path) -> dict:
    """Two-column CSV ``original,merged`` used to merge label tokens on load."""
    out = {}
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            if len(row) != 2:
                raise DataError("label map rows need exactly 2 fields", path, lineno)
            out[row[0].strip()] = row[1].strip()
    return out


def load_costs(path=None, m=None, uniform=False) -> np.ndarray:
    """Per-feature acquisition costs from a newline- or comma-separated file.

    With ``uniform`` and no ``path`` every feature costs 1.
    """
    if path is None:
        if not uniform:
            raise DataError("no cost file given and uniform costs not requested")
        if m is None:
            raise DataError("uniform costs need the feature count")
        return np.ones(m, dtype=np.float64)
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as e:
        raise DataError(f"cannot open: {e.strerror}", path) from e
    vals = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        for tok in line.split(","):
            tok = tok.strip()
            if not tok:
                continue
            try:
                v = float(tok)
            except ValueError:
                raise DataError(f"non-numeric cost {tok!r}", path, lineno) from None
            if not np.isfinite(v) or v <= 0:
                raise DataError(f"costs must be positive, got {tok}", path, lineno)
            vals.append(v)
    if m is not None and len(vals) != m:
        raise DataError(f"expected {m} costs, found {len(vals)}", path)
    if not vals:
        raise DataError("empty cost file", path)
    return np.array(vals, dtype=np.float64)


def write_costs(costs, path) -> None:
    with open(path, "w") as fh:
        for c in costs:
            c = float(c)
            fh.write(f"{int(c) if c.is_integer() else repr(c)}\n")


def quantize(data: Dataset, levels: int = 10, columns=None) -> Dataset:
    """Map features to ``levels`` uniformly spaced bins over their observed range.

    Bins are half-open except the last, which is closed so the maximum lands in
    bin ``levels - 1``.  Constant features map to bin 0.
    """
    if levels < 2:
        raise ValueError("levels must be >= 2")
    X = data.X.copy()
    cols = range(data.m) if columns is None else columns
    for j in cols:
        v = X[:, j]
        lo, hi = v.min(), v.max()
        if hi == lo:
            X[:, j] = 0.0
            continue
        b = np.floor((v - lo) / (hi - lo) * levels)
        X[:, j] = np.clip(b, 0, levels - 1)
    return replace(data, X=X)


def dedup(data: Dataset) -> Dataset:
    """Collapse identical feature rows to one, labeled by their most common label.

    Label ties go to the lowest class index; output keeps first-occurrence order.
    """
    _, first, inverse = np.unique(data.X, axis=0, return_index=True, return_inverse=True)
    inverse = inverse.ravel()
    votes = np.zeros((len(first), data.n_classes), dtype=np.int64)
    np.add.at(votes, (inverse, data.y), 1)
    order = np.argsort(first, kind="stable")
    keep = first[order]
    y = votes[order].argmax(axis=1)
    return replace(data, X=data.X[keep], y=y,
                   query_ids=None if data.query_ids is None else data.query_ids[keep])


def split_indices(n: int, fractions=(0.6, 0.2, 0.2), rng=None) -> list[np.ndarray]:
    """Random partition of ``range(n)`` into parts of the given fractions."""
    fr = np.asarray(fractions, dtype=np.float64)
    if np.any(fr < 0) or fr.sum() <= 0:
        raise ValueError("split fractions must be non-negative with a positive sum")
    fr = fr / fr.sum()
    perm = np.random.default_rng(rng).permutation(n)
    cuts = np.round(np.cumsum(fr)[:-1] * n).astype(int)
    return [np.sort(p) for p in np.split(perm, cuts)]


def load_index_file(path, n=None) -> np.ndarray:
    """Newline-separated zero-based row indices."""
    idx = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                i = int(line)
            except ValueError:
                raise DataError(f"bad row index {line!r}", path, lineno) from None
            if i < 0 or (n is not None and i >= n):
                raise DataError(f"row index {i} out of range", path, lineno)
            idx.append(i)
    return np.array(idx, dtype=np.int64)


def save_model(forest, path) -> None:
    text = forest.dumps()
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
        fh.write("\n")
    os.replace(tmp, path)


def load_model(path):
    from .forest import Forest

    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as e:
        raise ModelFormatError(f"{path}: cannot open: {e.strerror}") from e
    if not text.strip():
        raise ModelFormatError(f"{path}: empty model file")
    try:
        return Forest.loads(text)
    except ModelVersionError:
        raise
    except ModelFormatError as e:
        raise ModelFormatError(f"{path}: {e}") from e


__all__ = [
    "Dataset", "load_csv", "load_matrix", "write_csv", "load_label_map", "load_costs", "write_costs",
    "quantize", "dedup", "split_indices", "load_index_file", "save_model", "load_model",
]
