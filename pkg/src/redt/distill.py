"""Soft-label generation by repeated k-fold CV, label mixing and alpha search."""

import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import tree as _tree
from ._utils import derive_seed, parallel_map
from .data import SplitSpec, one_hot, train_test_split
from .teacher import SoftLabels


@dataclass(frozen=True)
class CvParams:
    repeats: int = 5
    folds: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")
        if self.folds < 2:
            raise ValueError("folds must be >= 2")


def _default_grid():
    return tuple(i / 10 for i in range(11))


@dataclass(frozen=True)
class AlphaGrid:
    values: tuple = field(default_factory=_default_grid)

    def __post_init__(self):
        v = tuple(float(a) for a in self.values)
        if not v:
            raise ValueError("alpha grid is empty")
        if any(a < 0 or a > 1 for a in v):
            raise ValueError("alpha values must lie in [0, 1]")
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("alpha values must be strictly ascending")
        object.__setattr__(self, "values", v)

    @classmethod
    def with_step(cls, step):
        count = int(round(1.0 / step))
        if count < 1 or abs(count * step - 1.0) > 1e-9:
            raise ValueError("step must divide 1 evenly")
        return cls(tuple(round(i * step, 12) for i in range(count + 1)))

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class MixedLabels:
    values: np.ndarray
    alpha: float

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)


def fold_partitions(n, params):
    """Fold index arrays for every repeat: ``result[r][f]`` is sorted.

    Repeat ``r`` shuffles with ``derive_seed(params.seed, "repeat", r)``;
    fold sizes differ by at most one.
    """
    if n < params.folds:
        raise ValueError(f"cannot split {n} rows into {params.folds} folds")
    out = []
    for r in range(params.repeats):
        perm = np.random.default_rng(derive_seed(params.seed, "repeat", r)).permutation(n)
        out.append([np.sort(part) for part in np.array_split(perm, params.folds)])
    return out


def _teach_fold(task):
    teacher, X, y, K, train, test, seed = task
    model = teacher(X[train], y[train], K, seed)
    proba = np.asarray(model.predict_proba(X[test]), dtype=np.float64)
    return proba, float(np.mean(np.argmax(proba, axis=1) == y[test]))


def cv_soft_labels(features, labels, teacher, params=CvParams(), class_count=None, jobs=1):
    """Out-of-fold teacher probabilities averaged over repeated k-fold CV.

    In each repeat the rows are split into ``params.folds`` folds; the
    teacher is trained on all but one fold and predicts the held-out one.
    Each row thus gets ``params.repeats`` predictions, which are averaged.

    ``teacher(X, y, class_count, seed)`` must return an object with
    ``predict_proba``. Raises ValueError when some training side lacks a
    class entirely.
    """
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    n = y.size
    K = int(class_count if class_count is not None else y.max() + 1)
    parts = fold_partitions(n, params)

    tasks = []
    for r, folds in enumerate(parts):
        for f, test in enumerate(folds):
            train = np.setdiff1d(np.arange(n), test, assume_unique=True)
            missing = np.setdiff1d(np.arange(K), y[train])
            if missing.size:
                raise ValueError(f"class absent from fold: repeat {r}, fold {f} trains "
                                 f"without class {int(missing[0])}")
            tasks.append((teacher, X, y, K, train, test,
                          derive_seed(params.seed, "teacher", r, f)))

    results = parallel_map(_teach_fold, tasks, jobs)
    sums = np.zeros((n, K))
    hits = np.zeros(n, dtype=np.int64)
    for (_, _, _, _, _, test, _), (proba, _) in zip(tasks, results):
        sums[test] += proba
        hits[test] += 1
    assert np.all(hits == params.repeats)
    return SoftLabels(sums / params.repeats, source=getattr(teacher, "source", "teacher"),
                      fold_accuracies=tuple(acc for _, acc in results))


def mix_labels(hard, soft, alpha):
    """``alpha * hard + (1 - alpha) * soft``, row by row."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    h = np.asarray(hard, dtype=np.float64)
    s = np.asarray(soft, dtype=np.float64)
    if h.shape != s.shape:
        raise ValueError(f"shape mismatch: hard {h.shape} vs soft {s.shape}")
    return MixedLabels(alpha * h + (1.0 - alpha) * s, float(alpha))


class AlphaScore(NamedTuple):
    alpha: float
    accuracy: float
    node_count: int


@dataclass(frozen=True)
class AlphaSearch:
    alpha_star: float
    scores: tuple
    warnings: tuple = ()


def grid_search_alpha(features, labels, soft, grid=AlphaGrid(), params=_tree.TreeParams(),
                      holdout_fraction=0.25, seed=0):
    """Pick alpha by holdout accuracy within the training rows.

    The rows are split once into a selection-train part and a holdout of
    ``holdout_fraction``; for every alpha a tree is fit on the first and
    scored on the second. Ties go to the larger alpha.
    """
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    S = np.asarray(soft, dtype=np.float64)
    if S.shape[0] != y.size:
        raise ValueError("soft labels and labels differ in length")
    fit_rows, hold_rows = train_test_split(y.size, SplitSpec(1.0 - holdout_fraction, seed))
    notes = []
    if np.unique(y[hold_rows]).size < 2:
        msg = "alpha-search holdout contains a single class"
        warnings.warn(msg)
        notes.append(msg)
    hard = one_hot(y, S.shape[1])
    scores = []
    best_alpha, best_acc = None, -1.0
    for alpha in grid.values:
        mixed = mix_labels(hard, S, alpha)
        t = _tree.fit(X[fit_rows], mixed.values[fit_rows], params)
        acc = float(np.mean(t.predict(X[hold_rows]) == y[hold_rows]))
        scores.append(AlphaScore(alpha, acc, t.node_count))
        if acc >= best_acc:
            best_alpha, best_acc = alpha, acc
    return AlphaSearch(best_alpha, tuple(scores), tuple(notes))
