"""Plain hard-label CART, written independently of the mixed-label kernel.

It counts classes with integer arithmetic and evaluates every midpoint
candidate by masking, so it shares no code path with :func:`redt.tree.fit`.
It uses the same candidate set, stopping rules and tie rules, which makes
a mixed-label tree grown on one-hot labels comparable node for node.
"""

import math

import numpy as np

from ._kernel import TIE_TOL
from .tree import Tree, TreeParams


def _impurity_from_counts(counts, n, criterion):
    acc = 0.0
    if criterion == "gini":
        for c in counts:
            p = c / n
            acc += p * p
        return 1.0 - acc
    for c in counts:
        p = c / n
        if p > 0.0:
            acc -= p * math.log2(p)
    return acc


def _midpoint(a, b):
    m = (a + b) * 0.5
    return a if m >= b else m


def _best_split(X, y, K, criterion):
    n = y.size
    counts = np.bincount(y, minlength=K).tolist()
    parent = _impurity_from_counts(counts, float(n), criterion)
    best = None
    best_d = 0.0
    for f in range(X.shape[1]):
        col = X[:, f]
        values = np.unique(col)
        for a, b in zip(values[:-1], values[1:]):
            t = _midpoint(float(a), float(b))
            mask = col <= t
            nl = int(mask.sum())
            nr = n - nl
            cl = np.bincount(y[mask], minlength=K).tolist()
            cr = [c - l for c, l in zip(counts, cl)]
            d = (parent
                 - (nl / n) * _impurity_from_counts(cl, float(nl), criterion)
                 - (nr / n) * _impurity_from_counts(cr, float(nr), criterion))
            if d > best_d + TIE_TOL:
                best_d = d
                best = (f, t)
    return best


def fit_cart(features, labels, class_count, params=TreeParams()):
    """Grow a CART tree on integer class labels.

    ``params.feature_subsample`` is not supported; all features are searched.
    """
    if params.feature_subsample is not None:
        raise ValueError("the reference CART searches all features")
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    K = int(class_count)
    nodes = []

    def grow(rows, parent):
        nid = len(nodes)
        ys = y[rows]
        m = rows.size
        counts = np.bincount(ys, minlength=K)
        node = {"parent": parent, "count": m, "value": [c / m for c in counts.tolist()],
                "feature": -1, "threshold": 0.0, "left": -1, "right": -1}
        nodes.append(node)
        if m <= params.min_leaf_size or np.count_nonzero(counts) == 1:
            return nid
        split = _best_split(X[rows], ys, K, params.criterion)
        if split is None:
            return nid
        f, t = split
        go_left = X[rows, f] <= t
        node["feature"], node["threshold"] = f, t
        node["left"] = grow(rows[go_left], nid)
        node["right"] = grow(rows[~go_left], nid)
        return nid

    grow(np.arange(y.size), -1)
    return Tree([d["feature"] for d in nodes], [d["threshold"] for d in nodes],
                [d["left"] for d in nodes], [d["right"] for d in nodes],
                [d["parent"] for d in nodes], [d["value"] for d in nodes],
                [d["count"] for d in nodes], n_features=X.shape[1])
