"""Soft-label sources: a built-in random forest and CSV import."""

import csv
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import tree as _tree
from ._utils import derive_seed, parallel_map
from .data import one_hot

ROW_SUM_TOL = 1e-3


@dataclass(frozen=True)
class SoftLabels:
    """Per-row class distributions produced by a teacher.

    ``source`` is ``"internal-forest"`` or ``"imported"``.
    ``fold_accuracies`` is filled when the labels came from cross-validation.
    """

    values: np.ndarray
    source: str = "internal-forest"
    fold_accuracies: tuple = field(default=(), compare=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2:
            raise ValueError("soft labels must be an (n, K) matrix")
        if np.any(v < 0) or np.any(v > 1):
            raise ValueError("soft label entries must lie in [0, 1]")
        if not np.allclose(v.sum(axis=1), 1.0, rtol=0, atol=1e-6):
            raise ValueError("soft label rows must sum to 1")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def shape(self):
        return self.values.shape

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)


@dataclass(frozen=True)
class ForestParams:
    """Random forest settings.

    ``tree_params.feature_subsample`` left as None means ``round(sqrt(D))``.
    """

    tree_count: int = 100
    tree_params: _tree.TreeParams = _tree.TreeParams()
    bootstrap: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.tree_count < 1:
            raise ValueError("tree_count must be >= 1")


class Forest:
    def __init__(self, trees, n_classes):
        self.trees = list(trees)
        self.n_classes = n_classes

    def predict_proba(self, X):
        """Mean of the member trees' leaf distributions, summed in tree order."""
        total = self.trees[0].predict_proba(X).copy()
        for t in self.trees[1:]:
            total += t.predict_proba(X)
        return total / len(self.trees)

    def predict(self, X):
        return np.argmax(self.predict_proba(X), axis=1)

    @property
    def node_count(self):
        return sum(t.node_count for t in self.trees)

    def __len__(self):
        return len(self.trees)


def _grow_member(args):
    X, Y, params, max_features, i = args
    seed = derive_seed(params.seed, "tree", i)
    n = X.shape[0]
    rows = np.random.default_rng(seed).integers(0, n, n) if params.bootstrap else None
    tp = replace(params.tree_params, feature_subsample=max_features, seed=seed)
    return _tree.fit(X, Y, tp, rows=rows)


def fit_forest(features, labels, params=ForestParams(), class_count=None, jobs=1):
    """Bagged trees on hard labels with per-node feature subsampling.

    Tree ``i`` draws its bootstrap rows and feature subsets from
    ``derive_seed(params.seed, "tree", i)``, so the forest does not depend
    on ``jobs`` or on scheduling order.
    """
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if X.shape[0] != y.shape[0]:
        raise ValueError(f"dimension mismatch: {X.shape[0]} feature rows vs {y.shape[0]} labels")
    if X.shape[0] < 2:
        raise ValueError("a forest needs at least 2 rows")
    K = int(class_count if class_count is not None else y.max() + 1)
    if K < 2:
        raise ValueError("a forest needs at least 2 classes")
    Y = one_hot(y, K)
    mf = params.tree_params.feature_subsample
    if mf is None:
        mf = max(1, int(round(math.sqrt(X.shape[1]))))
    tasks = [(X, Y, params, mf, i) for i in range(params.tree_count)]
    return Forest(parallel_map(_grow_member, tasks, jobs), K)


def forest_predict_proba(forest, x):
    x = np.asarray(x, dtype=np.float64)
    out = forest.predict_proba(x.reshape(1, -1) if x.ndim == 1 else x)
    return out[0] if x.ndim == 1 else out


class RandomForestTeacher:
    """Teacher callable for :func:`redt.distill.cv_soft_labels`.

    ``teacher(X, y, class_count, seed)`` returns a fitted :class:`Forest`.
    """

    source = "internal-forest"

    def __init__(self, params=ForestParams(), jobs=1):
        self.params = params
        self.jobs = jobs

    def __call__(self, features, labels, class_count, seed):
        return fit_forest(features, labels, replace(self.params, seed=seed),
                          class_count=class_count, jobs=self.jobs)


def import_soft_labels(path, expected_n, expected_k):
    """Read a headerless n x K CSV of teacher probabilities.

    Rows must be in the same order as the training-feature CSV. A row
    whose sum is within 1e-3 of 1 is renormalized; anything further off,
    or any negative entry, is an error.
    """
    with open(path, newline="", encoding="utf-8") as f:
        rows = [r for r in csv.reader(f) if r]
    if len(rows) != expected_n:
        raise ValueError(f"shape mismatch: expected {expected_n} rows, found {len(rows)}")
    values = np.empty((expected_n, expected_k))
    for i, row in enumerate(rows):
        if len(row) != expected_k:
            raise ValueError(f"shape mismatch: row {i} has {len(row)} columns, expected {expected_k}")
        try:
            values[i] = [float(c) for c in row]
        except ValueError:
            raise ValueError(f"row {i}: unparseable probability") from None
    if not np.all(np.isfinite(values)):
        raise ValueError("soft labels contain NaN or infinite values")
    if np.any(values < 0):
        i = int(np.argwhere(values < 0)[0, 0])
        raise ValueError(f"row {i}: negative entry")
    sums = values.sum(axis=1)
    bad = np.flatnonzero(np.abs(sums - 1.0) > ROW_SUM_TOL)
    if bad.size:
        raise ValueError(f"row {bad[0]}: row sum outside tolerance ({sums[bad[0]]!r})")
    return SoftLabels(values / sums[:, None], source="imported")


def write_soft_labels(soft, path):
    """Write soft labels in the format :func:`import_soft_labels` reads."""
    values = np.asarray(soft, dtype=np.float64)
    if hasattr(path, "write"):
        _write_rows(path, values)
        return
    with open(path, "w", newline="", encoding="utf-8") as f:
        _write_rows(f, values)


def _write_rows(f, values):
    w = csv.writer(f, lineterminator="\n")
    for row in values:
        w.writerow([repr(float(v)) for v in row])
