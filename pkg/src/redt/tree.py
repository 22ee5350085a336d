"""Decision trees grown on mixed (hard + soft) label distributions.

A node's class proportions are the mean of its members' label vectors,
its purity is judged on the members' pseudo-categories (argmax of each
label vector), and a leaf predicts the stored mean distribution. With
one-hot labels this is ordinary CART.
"""

import json
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from . import _kernel
from ._utils import SEED_MASK

CRITERIA = {"gini": _kernel.GINI, "entropy": _kernel.ENTROPY}
FORMAT_NAME = "redt-tree"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class TreeParams:
    """Growth parameters.

    ``feature_subsample`` is left unset for a plain tree; forests set it to
    the number of candidate features drawn at each node.
    """

    min_leaf_size: int = 5
    criterion: str = "gini"
    seed: int = 0
    feature_subsample: Optional[int] = None

    def __post_init__(self):
        if self.min_leaf_size < 1:
            raise ValueError("min_leaf_size must be >= 1")
        if self.criterion not in CRITERIA:
            raise ValueError(f"criterion must be one of {sorted(CRITERIA)}")
        if self.feature_subsample is not None and self.feature_subsample < 1:
            raise ValueError("feature_subsample must be >= 1")


class Split(NamedTuple):
    feature: int
    threshold: float
    decrease: float


def _label_array(labels):
    # accepts ndarrays as well as SoftLabels / MixedLabels containers
    return np.asarray(getattr(labels, "values", labels), dtype=np.float64)


def node_proportions(rows):
    """Class proportions of a node: the mean of its members' label rows."""
    rows = _label_array(rows)
    if rows.ndim != 2 or rows.shape[0] == 0:
        raise ValueError("node_proportions needs a non-empty (n, K) matrix")
    return rows.sum(axis=0) / rows.shape[0]


def impurity(p, criterion="gini"):
    """Gini index ``1 - sum p^2`` or entropy ``-sum p log2 p`` of ``p``."""
    p = np.asarray(p, dtype=np.float64)
    if criterion == "gini":
        return float(1.0 - np.sum(p * p))
    if criterion == "entropy":
        nz = p[p > 0]
        return float(-np.sum(nz * np.log2(nz)))
    raise ValueError(f"unknown criterion {criterion!r}")


def impurity_decrease(parent, left, right, criterion="gini"):
    """Impurity of ``parent`` minus the size-weighted impurity of its children.

    All three arguments are label-row matrices; ``left`` and ``right`` must
    be non-empty and together have as many rows as ``parent``.
    """
    parent, left, right = _label_array(parent), _label_array(left), _label_array(right)
    if left.shape[0] == 0 or right.shape[0] == 0:
        raise ValueError("empty child")
    n = parent.shape[0]
    if left.shape[0] + right.shape[0] != n:
        raise ValueError("children do not partition the parent")
    return (impurity(node_proportions(parent), criterion)
            - left.shape[0] / n * impurity(node_proportions(left), criterion)
            - right.shape[0] / n * impurity(node_proportions(right), criterion))


def pseudo_category(labels):
    """Argmax of a label vector (or of each row); ties go to the lowest index."""
    labels = _label_array(labels)
    return np.argmax(labels, axis=-1) if labels.ndim > 1 else int(np.argmax(labels))


def best_split(features, labels, params=TreeParams(), rows=None, candidate_features=None):
    """Highest impurity-decrease split of the node holding ``rows``.

    Candidates are midpoints between consecutive distinct values of each
    feature. Ties (within 1e-12) go to the lower feature index, then the
    lower threshold. Returns None when no candidate decreases impurity.
    Stopping rules (size, purity) are the caller's business.
    """
    X = np.asarray(features, dtype=np.float64)
    Y = _label_array(labels)
    idx = np.arange(X.shape[0]) if rows is None else np.asarray(rows, dtype=np.int64)
    if candidate_features is None:
        feats = np.arange(X.shape[1])
    else:
        feats = np.unique(np.asarray(candidate_features, dtype=np.int64))
    f, t, d = _kernel.search_split(X, Y, idx, feats, CRITERIA[params.criterion],
                                   _kernel.TIE_TOL)
    if f < 0:
        return None
    return Split(int(f), float(t), float(d))


class Tree:
    """Binary tree stored as parallel node arrays in depth-first order.

    Node 0 is the root. ``left[i] == -1`` marks a leaf. ``value[i]`` holds the
    mean label vector of the training rows that reached node ``i`` and
    ``sample_count[i]`` their number.
    """

    def __init__(self, feature, threshold, left, right, parent, value, sample_count,
                 n_features):
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.parent = np.asarray(parent, dtype=np.int64)
        self.value = np.asarray(value, dtype=np.float64)
        self.sample_count = np.asarray(sample_count, dtype=np.int64)
        self.n_features = int(n_features)
        for a in (self.feature, self.threshold, self.left, self.right, self.parent,
                  self.value, self.sample_count):
            a.flags.writeable = False

    @property
    def n_classes(self):
        return self.value.shape[1]

    @property
    def node_count(self):
        return self.feature.shape[0]

    def is_leaf(self, node):
        return self.left[node] == -1

    @property
    def leaves(self):
        return np.flatnonzero(self.left == -1)

    def depth(self):
        d = np.zeros(self.node_count, dtype=np.int64)
        for i in range(1, self.node_count):
            d[i] = d[self.parent[i]] + 1
        return int(d.max())

    def _check_X(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.n_features:
            raise ValueError(f"expected D={self.n_features} features, got {X.shape[1]}")
        return X

    def apply(self, X):
        """Leaf index for each row of ``X``."""
        X = self._check_X(X)
        return _kernel.apply_tree(self.feature, self.threshold, self.left, self.right, X)

    def predict_proba(self, X):
        return self.value[self.apply(X)]

    def predict(self, X):
        return np.argmax(self.predict_proba(X), axis=1)

    def __eq__(self, other):
        if not isinstance(other, Tree):
            return NotImplemented
        return dumps(self) == dumps(other)

    __hash__ = None

    def __repr__(self):
        return (f"Tree(nodes={self.node_count}, leaves={self.leaves.size}, "
                f"features={self.n_features}, classes={self.n_classes})")


def fit(features, mixed_labels, params=TreeParams(), rows=None):
    """Grow a tree on ``features`` against per-row label distributions.

    Parameters
    ----------
    features : array of shape (n, D)
    mixed_labels : array of shape (n, K), or a SoftLabels / MixedLabels
        Each row a distribution over classes.
    params : TreeParams
    rows : int array, optional
        Training rows (may repeat, e.g. a bootstrap draw). Defaults to all.
    """
    X = np.ascontiguousarray(features, dtype=np.float64)
    Y = np.ascontiguousarray(_label_array(mixed_labels))
    if X.ndim != 2 or Y.ndim != 2:
        raise ValueError("features and labels must be 2-d")
    if X.shape[0] != Y.shape[0]:
        raise ValueError(f"dimension mismatch: {X.shape[0]} feature rows vs {Y.shape[0]} label rows")
    idx = np.arange(X.shape[0]) if rows is None else np.asarray(rows, dtype=np.int64)
    if idx.size == 0:
        raise ValueError("cannot fit a tree on zero rows")
    pseudo = np.argmax(Y, axis=1)
    max_features = params.feature_subsample or 0
    arrays = _kernel.build_tree(X, Y, pseudo, idx, params.min_leaf_size,
                                CRITERIA[params.criterion], max_features,
                                np.uint64(params.seed & SEED_MASK), _kernel.TIE_TOL)
    return Tree(*arrays, n_features=X.shape[1])


def predict_distribution(tree, x):
    """Stored distribution of the leaf that ``x`` falls into (``x <= t`` goes left)."""
    return tree.predict_proba(np.asarray(x, dtype=np.float64).reshape(1, -1))[0]


def predict_label(tree, x):
    return int(np.argmax(predict_distribution(tree, x)))


def node_count(tree):
    """Number of nodes, internal and leaf."""
    return tree.node_count


def dumps(tree, metadata=None):
    """Serialize ``tree`` to the versioned line-oriented JSON text format.

    Floats are written with ``repr`` so :func:`loads` restores them exactly.
    """
    head = {"format": FORMAT_NAME, "version": FORMAT_VERSION,
            "n_features": tree.n_features, "n_classes": tree.n_classes,
            "node_count": tree.node_count}
    if metadata:
        head["metadata"] = metadata
    lines = [json.dumps(head, sort_keys=True)]
    for i in range(tree.node_count):
        node = {"id": i, "parent": int(tree.parent[i]),
                "sample_count": int(tree.sample_count[i]),
                "distribution": [float(v) for v in tree.value[i]]}
        if tree.left[i] != -1:
            node.update(feature=int(tree.feature[i]), threshold=float(tree.threshold[i]),
                        left=int(tree.left[i]), right=int(tree.right[i]))
        lines.append(json.dumps(node, sort_keys=True))
    return "\n".join(lines) + "\n"


def loads(text):
    """Inverse of :func:`dumps`. Returns ``(tree, metadata)``."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty tree file")
    head = json.loads(lines[0])
    if head.get("format") != FORMAT_NAME:
        raise ValueError("not a redt tree file")
    if head.get("version") != FORMAT_VERSION:
        raise ValueError(f"unsupported tree format version {head.get('version')}")
    nodes = [json.loads(ln) for ln in lines[1:]]
    n = len(nodes)
    if n != head["node_count"]:
        raise ValueError("node count mismatch")
    K = head["n_classes"]
    feature = np.full(n, -1)
    threshold = np.zeros(n)
    left = np.full(n, -1)
    right = np.full(n, -1)
    parent = np.full(n, -1)
    value = np.zeros((n, K))
    count = np.zeros(n, dtype=np.int64)
    for node in nodes:
        i = node["id"]
        parent[i] = node["parent"]
        count[i] = node["sample_count"]
        value[i] = node["distribution"]
        if "left" in node:
            feature[i] = node["feature"]
            threshold[i] = node["threshold"]
            left[i] = node["left"]
            right[i] = node["right"]
    for i in range(n):
        if left[i] != -1 and not (parent[left[i]] == i and parent[right[i]] == i):
            raise ValueError(f"inconsistent parent links at node {i}")
    tree = Tree(feature, threshold, left, right, parent, value, count, head["n_features"])
    return tree, head.get("metadata", {})


def save(tree, path, metadata=None):
    with open(path, "w", encoding="utf-8") as f:
        f.write(dumps(tree, metadata))


def load(path):
    with open(path, encoding="utf-8") as f:
        return loads(f.read())
