"""Tabular dataset loading, label encoding and train/test splitting."""

import csv
import math
import os
from dataclasses import dataclass, field, replace
from importlib import resources

import numpy as np

MISSING_TOKENS = frozenset({"", "?", "NA", "N/A", "nan", "NaN"})


class DataError(ValueError):
    """Raised when a CSV file cannot be turned into a valid Dataset."""


@dataclass(frozen=True, eq=False)
class Dataset:
    """Numeric feature matrix with integer class labels.

    Attributes
    ----------
    features : ndarray of shape (n, D)
        Finite float64 values. Categorical columns hold integer codes.
    labels : ndarray of shape (n,)
        Class indices in ``0 .. class_count - 1``.
    class_count : int
    feature_names : tuple of str
    class_names : tuple of str
    categories : dict
        Maps a feature index to the ordered category strings behind its codes.
    """

    features: np.ndarray
    labels: np.ndarray
    class_count: int
    feature_names: tuple
    class_names: tuple
    categories: dict = field(default_factory=dict)

    def __post_init__(self):
        X = np.asarray(self.features, dtype=np.float64)
        y = np.asarray(self.labels, dtype=np.int64)
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise DataError(f"features must be a non-empty 2-d matrix, got shape {X.shape}")
        if y.shape != (X.shape[0],):
            raise DataError("labels must have one entry per feature row")
        if not np.all(np.isfinite(X)):
            raise DataError("features contain NaN or infinite values")
        if self.class_count < 2:
            raise DataError("class_count must be at least 2")
        if len(self.class_names) != self.class_count:
            raise DataError("class_names must have class_count entries")
        if len(self.feature_names) != X.shape[1]:
            raise DataError("feature_names must have one entry per column")
        if y.min() < 0 or y.max() >= self.class_count:
            raise DataError("label index out of range")
        X.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "class_names", tuple(self.class_names))
        object.__setattr__(self, "categories",
                           {int(k): tuple(v) for k, v in self.categories.items()})

    @property
    def n_samples(self):
        return self.features.shape[0]

    @property
    def n_features(self):
        return self.features.shape[1]

    def subset(self, rows):
        """Dataset restricted to ``rows`` (encodings are kept)."""
        rows = np.asarray(rows, dtype=np.int64)
        return replace(self, features=self.features[rows], labels=self.labels[rows])

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (self.class_count == other.class_count
                and self.feature_names == other.feature_names
                and self.class_names == other.class_names
                and self.categories == other.categories
                and np.array_equal(self.features, other.features)
                and np.array_equal(self.labels, other.labels))

    __hash__ = None


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.7
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must lie in (0, 1)")


def _resolve_column(col, header, width):
    if isinstance(col, str) and not col.lstrip("-").isdigit():
        if header is None or col not in header:
            raise DataError(f"unknown column {col!r}")
        return header.index(col)
    idx = int(col)
    if idx < 0:
        idx += width
    if not 0 <= idx < width:
        raise DataError(f"column index {col} out of range for {width} columns")
    return idx


def load_csv(path, label_col=-1, categorical=(), header=True, encoding=None):
    """Read a CSV file into a :class:`Dataset`.

    Parameters
    ----------
    path : str or path-like
    label_col : int or str
        Label column, by position in the file (negative counts from the
        end) or by header name.
    categorical : iterable of int or str
        Columns holding category strings. They are integer-coded in order
        of first appearance. Every other column must parse as a float.
    header : bool
        Whether the first row holds column names.
    encoding : Dataset, optional
        Reuse the class and category codes of an existing dataset, e.g. to
        load test rows for a tree trained elsewhere. Unknown categories
        and classes are errors.

    Missing cells ("", "?", "NA", ...) are rejected rather than imputed.
    """
    if not os.path.exists(path):
        raise FileNotFoundError(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as f:
        rows = [r for r in csv.reader(f) if r]
    if not rows:
        raise DataError(f"empty file: {path}")
    names = [c.strip() for c in rows[0]] if header else None
    body = rows[1:] if header else rows
    if not body:
        raise DataError(f"empty file: {path} has no data rows")
    width = len(rows[0])
    label = _resolve_column(label_col, names, width)
    cat_cols = {_resolve_column(c, names, width) for c in categorical}
    cat_cols.discard(label)
    feat_cols = [c for c in range(width) if c != label]
    if not feat_cols:
        raise DataError("no feature columns")

    if encoding is not None:
        class_codes = {name: i for i, name in enumerate(encoding.class_names)}
        cat_codes = {feat_cols[j]: {v: i for i, v in enumerate(vals)}
                     for j, vals in encoding.categories.items()}
        frozen = True
    else:
        class_codes = {}
        cat_codes = {c: {} for c in cat_cols}
        frozen = False

    X = np.empty((len(body), len(feat_cols)), dtype=np.float64)
    y = np.empty(len(body), dtype=np.int64)
    for i, row in enumerate(body):
        lineno = i + 1 + bool(header)
        if len(row) != width:
            raise DataError(f"line {lineno}: expected {width} cells, found {len(row)}")
        cells = [c.strip() for c in row]
        lab = cells[label]
        if lab in MISSING_TOKENS:
            raise DataError(f"line {lineno}: missing label")
        if lab not in class_codes:
            if frozen:
                raise DataError(f"line {lineno}: unknown class {lab!r}")
            class_codes[lab] = len(class_codes)
        y[i] = class_codes[lab]
        for j, c in enumerate(feat_cols):
            cell = cells[c]
            if cell in MISSING_TOKENS:
                raise DataError(f"unparseable cell {cell!r} at line {lineno}, column {c}"
                                " (missing values are not imputed)")
            if c in cat_codes:
                codes = cat_codes[c]
                if cell not in codes:
                    if frozen:
                        raise DataError(f"line {lineno}: unknown category {cell!r} in column {c}")
                    codes[cell] = len(codes)
                X[i, j] = codes[cell]
            else:
                try:
                    v = float(cell)
                except ValueError:
                    raise DataError(f"unparseable cell {cell!r} at line {lineno}, column {c}") from None
                if not math.isfinite(v):
                    raise DataError(f"unparseable cell {cell!r} at line {lineno}, column {c}")
                X[i, j] = v

    if encoding is not None:
        return replace(encoding, features=X, labels=y)
    if len(class_codes) < 2:
        raise DataError("label column has a single distinct value; need at least 2 classes")
    if names is not None:
        feature_names = [names[c] for c in feat_cols]
    else:
        feature_names = [f"x{c}" for c in feat_cols]
    categories = {j: list(cat_codes[c]) for j, c in enumerate(feat_cols) if c in cat_codes}
    return Dataset(X, y, len(class_codes), feature_names, list(class_codes), categories)


def read_features(path, n_features, categories=None, header=True, drop_col=None):
    """Read an unlabeled feature matrix for prediction.

    ``categories`` maps feature index to known category strings (as stored
    on a Dataset or a saved tree); other columns must be numeric.
    ``drop_col`` removes one column (e.g. a label) before checking width.
    """
    categories = categories or {}
    with open(path, newline="", encoding="utf-8") as f:
        rows = [r for r in csv.reader(f) if r]
    if not rows:
        raise DataError(f"empty file: {path}")
    drop_idx = None
    if drop_col is not None:
        names = [c.strip() for c in rows[0]] if header else None
        drop_idx = _resolve_column(drop_col, names, len(rows[0]))
    if header:
        rows = rows[1:]
    if not rows:
        raise DataError(f"empty file: {path}")
    X = np.empty((len(rows), n_features), dtype=np.float64)
    for i, row in enumerate(rows):
        cells = [c.strip() for c in row]
        if drop_col is not None:
            del cells[drop_idx]
        if len(cells) != n_features:
            raise DataError(f"row {i}: expected D={n_features} feature columns, found {len(cells)}")
        for j, cell in enumerate(cells):
            if cell in MISSING_TOKENS:
                raise DataError(f"unparseable cell {cell!r} in row {i}, feature {j}")
            if j in categories:
                try:
                    X[i, j] = list(categories[j]).index(cell)
                except ValueError:
                    raise DataError(f"row {i}: unknown category {cell!r} for feature {j}") from None
                continue
            try:
                X[i, j] = float(cell)
            except ValueError:
                raise DataError(f"unparseable cell {cell!r} in row {i}, feature {j}") from None
    if not np.all(np.isfinite(X)):
        raise DataError("features contain NaN or infinite values")
    return X


def read_column(path, col, header=True):
    """Stripped string cells of one column (by index or header name)."""
    with open(path, newline="", encoding="utf-8") as f:
        rows = [r for r in csv.reader(f) if r]
    if not rows:
        raise DataError(f"empty file: {path}")
    names = [c.strip() for c in rows[0]] if header else None
    idx = _resolve_column(col, names, len(rows[0]))
    return [r[idx].strip() for r in (rows[1:] if header else rows)]


def write_csv(dataset, path, header=True):
    """Write ``dataset`` as CSV with the label as the last column.

    Categorical codes are written back as their category strings and
    floats use ``repr`` so that :func:`load_csv` reads back the same values.
    """
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        if header:
            w.writerow(list(dataset.feature_names) + ["class"])
        for x, lab in zip(dataset.features, dataset.labels):
            cells = []
            for j, v in enumerate(x):
                if j in dataset.categories:
                    cells.append(dataset.categories[j][int(v)])
                else:
                    cells.append(repr(float(v)))
            cells.append(dataset.class_names[lab])
            w.writerow(cells)


def one_hot(labels, class_count=None):
    """Hard-label matrix: row ``i`` has a single 1 at column ``labels[i]``.

    Accepts a :class:`Dataset` or an integer label vector plus
    ``class_count``.
    """
    if isinstance(labels, Dataset):
        labels, class_count = labels.labels, labels.class_count
    labels = np.asarray(labels, dtype=np.int64)
    if class_count is None:
        raise ValueError("class_count is required for a bare label vector")
    out = np.zeros((labels.size, class_count), dtype=np.float64)
    out[np.arange(labels.size), labels] = 1.0
    return out


def train_test_split(n, spec=SplitSpec()):
    """Random, unstratified partition of ``range(n)`` into train and test rows.

    ``n`` may also be a :class:`Dataset`. The train side holds
    ``round(train_fraction * n)`` rows (halves round up). Both index
    arrays are returned sorted.
    """
    if isinstance(n, Dataset):
        n = n.n_samples
    if n < 2:
        raise ValueError("need at least 2 rows to split")
    n_train = int(math.floor(spec.train_fraction * n + 0.5))
    if n_train == 0 or n_train == n:
        raise ValueError(f"split of {n} rows at {spec.train_fraction} leaves one side empty")
    perm = np.random.default_rng(spec.seed).permutation(n)
    return np.sort(perm[:n_train]), np.sort(perm[n_train:])


# label column, categorical columns
BENCHMARKS = {
    "crx": ("class", ["A1", "A4", "A5", "A6", "A7", "A9", "A10", "A12", "A13"]),
    "german": ("class", ["checking_status", "credit_history", "purpose", "savings",
                         "employment", "personal_status", "other_debtors", "property",
                         "other_installment_plans", "housing", "job", "telephone",
                         "foreign_worker"]),
    "cmc": ("contraceptive_method", []),
}


def benchmark_path(name):
    if name not in BENCHMARKS:
        raise KeyError(f"unknown benchmark {name!r}; choose from {sorted(BENCHMARKS)}")
    return str(resources.files("redt").joinpath("datasets", f"{name}.csv"))


def load_benchmark(name):
    """Load one of the bundled UCI datasets (``crx``, ``german``, ``cmc``)."""
    path = benchmark_path(name)
    label, cats = BENCHMARKS[name]
    return load_csv(path, label_col=label, categorical=cats)
