"""Accuracy, significance testing, compression reports and decision paths."""

import io
import csv
import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional

import numpy as np
from scipy.stats import rankdata, spearmanr

from . import tree as _tree
from ._utils import derive_seed, parallel_map
from .data import SplitSpec, one_hot, train_test_split
from .distill import AlphaGrid, CvParams, cv_soft_labels, grid_search_alpha, mix_labels
from .teacher import ForestParams, RandomForestTeacher, SoftLabels, fit_forest

EXACT_MAX_PAIRS = 12
MIN_PAIRS = 5


def accuracy(predictions, truth):
    predictions = np.asarray(predictions)
    truth = np.asarray(truth)
    if predictions.shape != truth.shape or truth.size == 0:
        raise ValueError("predictions and truth must be non-empty and equally long")
    return float(np.mean(predictions == truth))


class WilcoxonResult(NamedTuple):
    statistic: float
    p_value: float
    significant: bool
    n_pairs: int
    exact: bool


def _exact_upper_lower(ranks, w_plus):
    # Null distribution of W+ under random signs; ranks may be half-integers,
    # so work with doubled ranks to keep everything integral.
    doubled = np.rint(2 * np.asarray(ranks)).astype(np.int64)
    counts = np.zeros(int(doubled.sum()) + 1, dtype=np.int64)
    counts[0] = 1
    for r in doubled:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[:counts.size - r]
        counts = counts + shifted
    obs = int(round(2 * w_plus))
    total = float(2 ** len(doubled))
    return counts[obs:].sum() / total, counts[:obs + 1].sum() / total


def wilcoxon_signed_rank(a, b, level=0.05):
    """Two-sided Wilcoxon signed-rank test on the paired differences ``a - b``.

    Zero differences are dropped. Tied absolute differences get average
    ranks. With at most 12 remaining pairs the p-value comes from the exact
    permutation distribution of the positive rank sum; above that a normal
    approximation with tie correction (no continuity correction) is used.
    The returned statistic is ``min(W+, W-)``.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError("paired samples must have equal length")
    d = a - b
    d = d[d != 0]
    m = d.size
    if m < MIN_PAIRS:
        raise ValueError(f"insufficient pairs: {m} nonzero differences, need {MIN_PAIRS}")
    ranks = rankdata(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    w_minus = float(ranks.sum()) - w_plus
    if m <= EXACT_MAX_PAIRS:
        upper, lower = _exact_upper_lower(ranks, w_plus)
        p = min(1.0, 2.0 * min(upper, lower))
        exact = True
    else:
        _, ties = np.unique(ranks, return_counts=True)
        var = m * (m + 1) * (2 * m + 1) / 24.0 - np.sum(ties ** 3 - ties) / 48.0
        if var <= 0:
            p = 1.0
        else:
            z = (w_plus - m * (m + 1) / 4.0) / math.sqrt(var)
            p = math.erfc(abs(z) / math.sqrt(2.0))
        exact = False
    return WilcoxonResult(min(w_plus, w_minus), p, p < level, m, exact)


def impurity_value_count(n, k):
    """Number of ordered class-count vectors of ``k`` classes summing to ``n``.

    This bounds how many distinct impurity values a node of ``n``
    hard-labeled samples can take: ``C(n + k - 1, k - 1)``.
    """
    if n < 0 or k < 1:
        raise ValueError("need n >= 0 and k >= 1")
    return math.comb(n + k - 1, k - 1)


class PathStep(NamedTuple):
    feature: int
    threshold: float
    went_left: bool


@dataclass(frozen=True)
class Explanation:
    row_index: Optional[int]
    predicted_class: int
    path: tuple
    key_features: tuple
    leaf: int

    def replay(self, tree, x):
        """Re-run the recorded comparisons against ``x``; return the leaf reached.

        Raises AssertionError if a recorded direction disagrees with ``x``.
        """
        node = 0
        for step in self.path:
            assert tree.feature[node] == step.feature
            go_left = x[step.feature] <= step.threshold
            assert go_left == step.went_left
            node = tree.left[node] if go_left else tree.right[node]
        assert tree.is_leaf(node)
        return int(node)

    def format(self, feature_names=None, class_names=None):
        lines = []
        for s in self.path:
            name = feature_names[s.feature] if feature_names else f"x[{s.feature}]"
            op = "<=" if s.went_left else ">"
            lines.append(f"{name} {op} {s.threshold!r}")
        label = class_names[self.predicted_class] if class_names else self.predicted_class
        head = "row" if self.row_index is None else f"row {self.row_index}"
        keys = ", ".join(feature_names[f] if feature_names else str(f) for f in self.key_features)
        return (f"{head}: predicted {label}\n"
                + "".join(f"  {ln}\n" for ln in lines)
                + f"  key features: {keys}\n")


def explain(tree, x, row_index=None):
    """Root-to-leaf decisions taken for ``x`` and the distinct features they use."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (tree.n_features,):
        raise ValueError(f"expected D={tree.n_features} features, got {x.shape}")
    node = 0
    path = []
    keys = []
    while not tree.is_leaf(node):
        f = int(tree.feature[node])
        t = float(tree.threshold[node])
        go_left = bool(x[f] <= t)
        path.append(PathStep(f, t, go_left))
        if f not in keys:
            keys.append(f)
        node = int(tree.left[node] if go_left else tree.right[node])
    pred = int(np.argmax(tree.value[node]))
    return Explanation(row_index, pred, tuple(path), tuple(keys), node)


def overlay_ppm(x, key_features, shape):
    """Binary PPM (P6) image of ``x`` in gray with key features in red.

    ``shape`` is (height, width) and ``x`` is read in row-major order.
    """
    h, w = shape
    x = np.asarray(x, dtype=np.float64)
    if x.size != h * w:
        raise ValueError(f"image shape {h}x{w} does not match {x.size} features")
    lo, hi = x.min(), x.max()
    gray = np.zeros(x.size) if hi == lo else (x - lo) / (hi - lo)
    gray = np.rint(gray * 255).astype(np.uint8)
    rgb = np.repeat(gray[:, None], 3, axis=1)
    keys = np.asarray(list(key_features), dtype=np.int64)
    if keys.size:
        rgb[keys] = (255, 0, 0)
    return f"P6\n{w} {h}\n255\n".encode("ascii") + rgb.tobytes()


@dataclass(frozen=True)
class BenchmarkConfig:
    seed: int = 0
    train_fraction: float = 0.7
    tree_params: _tree.TreeParams = _tree.TreeParams()
    forest_params: ForestParams = ForestParams()
    cv_params: CvParams = CvParams()
    grid: AlphaGrid = AlphaGrid()
    holdout_fraction: float = 0.25
    level: float = 0.05
    jobs: int = 1


class RunRecord(NamedTuple):
    run: int
    seed: int
    alpha_star: float
    dt_accuracy: float
    redt_accuracy: float
    teacher_accuracy: float
    dt_nodes: int
    redt_nodes: int
    alpha_accuracy: tuple
    alpha_nodes: tuple


class BenchmarkError(RuntimeError):
    pass


@dataclass(frozen=True)
class BenchmarkReport:
    """Per-run results; every aggregate is recomputed from ``records``."""

    dataset: str
    grid: tuple
    records: tuple
    teacher: str = "internal-rf"
    level: float = 0.05
    notes: tuple = field(default=())

    def _column(self, name):
        return np.array([getattr(r, name) for r in self.records], dtype=np.float64)

    def mean(self, name):
        return float(np.mean(self._column(name)))

    @property
    def compression_rate(self):
        return self.mean("redt_nodes") / self.mean("dt_nodes")

    def _wilcoxon(self, a, b):
        try:
            return wilcoxon_signed_rank(self._column(a), self._column(b), self.level)
        except ValueError:
            return None

    @property
    def wilcoxon_accuracy(self):
        """ReDT vs DT test accuracy; None with fewer than 5 nonzero differences."""
        return self._wilcoxon("redt_accuracy", "dt_accuracy")

    @property
    def wilcoxon_nodes(self):
        return self._wilcoxon("redt_nodes", "dt_nodes")

    def alpha_curve(self):
        """(alpha, mean test accuracy, mean nodes, compression rate) per grid value."""
        acc = np.array([r.alpha_accuracy for r in self.records], dtype=np.float64).mean(axis=0)
        nodes = np.array([r.alpha_nodes for r in self.records], dtype=np.float64).mean(axis=0)
        dt = self.mean("dt_nodes")
        return [(a, float(x), float(n), float(n) / dt) for a, x, n in zip(self.grid, acc, nodes)]

    def alpha_node_spearman(self):
        """Rank correlation between alpha and mean ReDT node count."""
        nodes = [c[2] for c in self.alpha_curve()]
        if len(set(nodes)) < 2:
            return 0.0
        return float(spearmanr(self.grid, nodes)[0])

    COLUMNS = ("dataset", "record", "run", "seed", "alpha_star", "dt_accuracy",
               "redt_accuracy", "teacher_accuracy", "dt_nodes", "redt_nodes",
               "compression_rate", "statistic", "p_value", "significant")

    def to_csv(self):
        """One row per run, then a mean row and one row per Wilcoxon test."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.COLUMNS)
        blank = [""] * 3
        for r in self.records:
            w.writerow([self.dataset, "run", r.run, r.seed, repr(r.alpha_star),
                        repr(r.dt_accuracy), repr(r.redt_accuracy), repr(r.teacher_accuracy),
                        r.dt_nodes, r.redt_nodes, repr(r.redt_nodes / r.dt_nodes)] + blank)
        w.writerow([self.dataset, "mean", "", ""]
                   + [repr(self.mean(c)) for c in ("alpha_star", "dt_accuracy", "redt_accuracy",
                                                   "teacher_accuracy", "dt_nodes", "redt_nodes")]
                   + [repr(self.compression_rate)] + blank)
        for name, res in (("wilcoxon_accuracy", self.wilcoxon_accuracy),
                          ("wilcoxon_nodes", self.wilcoxon_nodes)):
            tail = (["", "", "insufficient pairs"] if res is None
                    else [repr(res.statistic), repr(res.p_value), str(res.significant).lower()])
            w.writerow([self.dataset, name] + [""] * 9 + tail)
        return buf.getvalue()

    def alpha_csv(self):
        """Per-run, per-alpha test accuracy and node count, plus mean rows."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["dataset", "run", "alpha", "test_accuracy", "nodes", "compression_rate"])
        for r in self.records:
            for a, acc, n in zip(self.grid, r.alpha_accuracy, r.alpha_nodes):
                w.writerow([self.dataset, r.run, repr(a), repr(acc), n, repr(n / r.dt_nodes)])
        for a, acc, n, rate in self.alpha_curve():
            w.writerow([self.dataset, "mean", repr(a), repr(acc), repr(n), repr(rate)])
        return buf.getvalue()

    def to_table(self):
        """Human-readable summary."""
        lines = [f"dataset {self.dataset}  teacher {self.teacher}  runs {len(self.records)}",
                 f"{'run':>4} {'alpha*':>6} {'teacher':>8} {'DT acc':>8} {'ReDT acc':>8} "
                 f"{'DT nodes':>8} {'ReDT nodes':>10}"]
        for r in self.records:
            lines.append(f"{r.run:>4} {r.alpha_star:>6.2f} {r.teacher_accuracy:>8.2%} "
                         f"{r.dt_accuracy:>8.2%} {r.redt_accuracy:>8.2%} "
                         f"{r.dt_nodes:>8d} {r.redt_nodes:>10d}")
        lines.append(f"mean {self.mean('alpha_star'):>6.2f} {self.mean('teacher_accuracy'):>8.2%} "
                     f"{self.mean('dt_accuracy'):>8.2%} {self.mean('redt_accuracy'):>8.2%} "
                     f"{self.mean('dt_nodes'):>8.1f} {self.mean('redt_nodes'):>10.1f}")
        lines.append(f"compression rate {self.compression_rate:.3f}")
        for name, res in (("accuracy", self.wilcoxon_accuracy), ("nodes", self.wilcoxon_nodes)):
            if res is None:
                lines.append(f"wilcoxon {name}: insufficient pairs")
            else:
                mark = " *" if res.significant else ""
                lines.append(f"wilcoxon {name}: W={res.statistic:g} p={res.p_value:.4g}{mark}")
        return "\n".join(lines) + "\n"


def _one_run(task):
    X, y, K, teacher_soft, config, run = task
    run_seed = derive_seed(config.seed, "run", run)
    try:
        train, test = train_test_split(y.size, SplitSpec(config.train_fraction,
                                                         derive_seed(run_seed, "split")))
        Xtr, ytr = X[train], y[train]
        if teacher_soft is None:
            soft = cv_soft_labels(Xtr, ytr, RandomForestTeacher(config.forest_params),
                                  CvParams(config.cv_params.repeats, config.cv_params.folds,
                                           derive_seed(run_seed, "cv")), K).values
            forest = fit_forest(Xtr, ytr, replace(config.forest_params,
                                                  seed=derive_seed(run_seed, "teacher")), K)
            teacher_acc = accuracy(forest.predict(X[test]), y[test])
        else:
            soft = teacher_soft[train]
            teacher_acc = accuracy(np.argmax(teacher_soft[test], axis=1), y[test])

        search = grid_search_alpha(Xtr, ytr, soft, config.grid, config.tree_params,
                                   config.holdout_fraction, derive_seed(run_seed, "alpha"))
        hard = one_hot(ytr, K)
        dt = _tree.fit(Xtr, hard, config.tree_params)
        curve_acc, curve_nodes = [], []
        redt = None
        for alpha in config.grid.values:
            t = _tree.fit(Xtr, mix_labels(hard, soft, alpha), config.tree_params)
            curve_acc.append(accuracy(t.predict(X[test]), y[test]))
            curve_nodes.append(t.node_count)
            if alpha == search.alpha_star:
                redt = t
        return RunRecord(run, run_seed, search.alpha_star,
                         accuracy(dt.predict(X[test]), y[test]),
                         accuracy(redt.predict(X[test]), y[test]), teacher_acc,
                         dt.node_count, redt.node_count, tuple(curve_acc), tuple(curve_nodes))
    except Exception as exc:
        raise BenchmarkError(f"run {run} (seed {run_seed}) failed: {exc}") from exc


def run_benchmark(dataset, teacher="internal-rf", runs=10, config=BenchmarkConfig(), name=None):
    """Repeat the DT vs ReDT comparison over ``runs`` random 70/30 splits.

    Each run splits the data, builds soft labels for the training side,
    searches alpha on an internal holdout, and scores DT (alpha = 1),
    ReDT (alpha*) and the teacher on the test side. Every alpha on the grid
    is also fit on the full training side so compression curves can be drawn.

    ``teacher`` is ``"internal-rf"`` or a :class:`SoftLabels` covering all
    rows of ``dataset`` (e.g. from :func:`redt.teacher.import_soft_labels`).
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    X, y, K = dataset.features, dataset.labels, dataset.class_count
    if isinstance(teacher, SoftLabels):
        if teacher.shape != (y.size, K):
            raise ValueError(f"imported soft labels have shape {teacher.shape}, "
                             f"dataset needs {(y.size, K)}")
        soft, mode = teacher.values, "imported"
    elif teacher == "internal-rf":
        soft, mode = None, "internal-rf"
    else:
        raise ValueError(f"unknown teacher {teacher!r}")
    tasks = [(X, y, K, soft, config, r) for r in range(runs)]
    records = parallel_map(_one_run, tasks, config.jobs)
    return BenchmarkReport(name or "dataset", config.grid.values, tuple(records), mode,
                           config.level)
