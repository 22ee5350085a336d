"""Compiled inner loops for tree induction and routing.

Everything here works on plain arrays. Labels ``Y`` are an (n, K) float
matrix of per-row distributions; rows of a node are given as an index
array into ``X``/``Y`` (duplicates allowed, which is how bootstrap
resamples are expressed).
"""

import numpy as np
from numba import njit

GINI = 0
ENTROPY = 1

# A candidate split replaces the incumbent only if it improves the impurity
# decrease by more than this; it also serves as the "> 0" threshold.
TIE_TOL = 1e-12

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


@njit(cache=True)
def next_u64(state):
    """splitmix64 step; ``state`` is a 1-element uint64 array."""
    z = state[0] + _GOLDEN
    state[0] = z
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


@njit(cache=True)
def sample_features(n_features, m, state):
    """``m`` distinct feature indices in ascending order (partial Fisher-Yates)."""
    pool = np.arange(n_features)
    for i in range(m):
        span = np.uint64(n_features - i)
        j = i + np.int64(next_u64(state) % span)
        tmp = pool[i]
        pool[i] = pool[j]
        pool[j] = tmp
    return np.sort(pool[:m])


@njit(cache=True)
def impurity_of_sums(s, n, criterion):
    # impurity of the distribution s / n, accumulated in class order
    acc = 0.0
    if criterion == GINI:
        for k in range(s.shape[0]):
            p = s[k] / n
            acc += p * p
        return 1.0 - acc
    for k in range(s.shape[0]):
        p = s[k] / n
        if p > 0.0:
            acc -= p * np.log2(p)
    return acc


@njit(cache=True)
def midpoint(a, b):
    m = (a + b) * 0.5
    if m >= b:
        # a and b are adjacent floats; keep "x <= t goes left" consistent
        m = a
    return m


@njit(cache=True)
def search_split(X, Y, idx, feats, criterion, tol):
    """Best (feature, threshold, decrease) over midpoint candidates.

    ``feats`` must be ascending: earlier features and lower thresholds win
    ties. Returns feature -1 when no candidate has decrease > tol.
    """
    n = idx.shape[0]
    K = Y.shape[1]
    total = np.zeros(K)
    for i in range(n):
        r = idx[i]
        for k in range(K):
            total[k] += Y[r, k]
    nf = float(n)
    parent = impurity_of_sums(total, nf, criterion)

    best_f = -1
    best_t = 0.0
    best_d = 0.0
    vals = np.empty(n)
    left = np.empty(K)
    right = np.empty(K)
    for fi in range(feats.shape[0]):
        f = feats[fi]
        for i in range(n):
            vals[i] = X[idx[i], f]
        order = np.argsort(vals, kind="mergesort")
        left[:] = 0.0
        for i in range(n - 1):
            r = idx[order[i]]
            for k in range(K):
                left[k] += Y[r, k]
            a = vals[order[i]]
            b = vals[order[i + 1]]
            if a < b:
                nl = float(i + 1)
                nr = nf - nl
                for k in range(K):
                    right[k] = total[k] - left[k]
                d = (parent
                     - (nl / nf) * impurity_of_sums(left, nl, criterion)
                     - (nr / nf) * impurity_of_sums(right, nr, criterion))
                if d > best_d + tol:
                    best_d = d
                    best_f = f
                    best_t = midpoint(a, b)
    return best_f, best_t, best_d


@njit(cache=True)
def build_tree(X, Y, pseudo, root_idx, min_leaf, criterion, max_features, seed, tol):
    """Grow a tree depth-first (left child first) and return its node arrays.

    A node becomes a leaf when it has at most ``min_leaf`` rows, when all
    its rows share a pseudo-category, or when no split decreases impurity.
    ``max_features`` > 0 draws that many candidate features per node from
    a splitmix64 stream seeded with ``seed``.
    """
    n = root_idx.shape[0]
    K = Y.shape[1]
    D = X.shape[1]
    cap = 2 * n - 1
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    parent = np.full(cap, -1, dtype=np.int64)
    value = np.zeros((cap, K))
    count = np.zeros(cap, dtype=np.int64)

    buf = root_idx.copy()
    st_start = np.empty(cap, dtype=np.int64)
    st_end = np.empty(cap, dtype=np.int64)
    st_parent = np.empty(cap, dtype=np.int64)
    st_side = np.empty(cap, dtype=np.int64)
    sp = 0
    st_start[0] = 0
    st_end[0] = n
    st_parent[0] = -1
    st_side[0] = 0
    sp = 1

    state = np.empty(1, dtype=np.uint64)
    state[0] = seed
    all_feats = np.arange(D)
    subsample = 0 < max_features < D
    n_nodes = 0

    while sp > 0:
        sp -= 1
        s = st_start[sp]
        e = st_end[sp]
        par = st_parent[sp]
        nid = n_nodes
        n_nodes += 1
        parent[nid] = par
        if par >= 0:
            if st_side[sp] == 0:
                left[par] = nid
            else:
                right[par] = nid

        m = e - s
        count[nid] = m
        for i in range(s, e):
            r = buf[i]
            for k in range(K):
                value[nid, k] += Y[r, k]
        for k in range(K):
            value[nid, k] /= m

        if m <= min_leaf:
            continue
        pure = True
        first = pseudo[buf[s]]
        for i in range(s + 1, e):
            if pseudo[buf[i]] != first:
                pure = False
                break
        if pure:
            continue

        if subsample:
            feats = sample_features(D, max_features, state)
        else:
            feats = all_feats
        f, t, _ = search_split(X, Y, buf[s:e], feats, criterion, tol)
        if f < 0:
            continue
        feature[nid] = f
        threshold[nid] = t

        members = buf[s:e].copy()
        nl = 0
        for i in range(m):
            if X[members[i], f] <= t:
                buf[s + nl] = members[i]
                nl += 1
        j = s + nl
        for i in range(m):
            if X[members[i], f] > t:
                buf[j] = members[i]
                j += 1

        # right pushed first so the left subtree is numbered first
        st_start[sp] = s + nl
        st_end[sp] = e
        st_parent[sp] = nid
        st_side[sp] = 1
        sp += 1
        st_start[sp] = s
        st_end[sp] = s + nl
        st_parent[sp] = nid
        st_side[sp] = 0
        sp += 1

    return (feature[:n_nodes], threshold[:n_nodes], left[:n_nodes], right[:n_nodes],
            parent[:n_nodes], value[:n_nodes], count[:n_nodes])


@njit(cache=True)
def apply_tree(feature, threshold, left, right, X):
    """Leaf index reached by each row of ``X``."""
    out = np.empty(X.shape[0], dtype=np.int64)
    for i in range(X.shape[0]):
        node = 0
        while left[node] != -1:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = node
    return out
