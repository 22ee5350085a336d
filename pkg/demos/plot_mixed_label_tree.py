"""
Trees grown on mixed labels
===========================

A decision tree normally sees one-hot labels. Here every row carries a
probability vector instead, and the tree measures impurity on the mean
vector of each node.
"""

import numpy as np
from redt import TreeParams, fit, mix_labels, one_hot
from redt.tree import best_split, impurity, node_proportions

rng = np.random.default_rng(0)

# two noisy blobs on a line
X = np.r_[rng.normal(-1, 1, 40), rng.normal(1, 1, 40)][:, None]
y = np.r_[np.zeros(40, int), np.ones(40, int)]
hard = one_hot(y, 2)

# a "teacher" that is confident near the blob centres and unsure in between
p1 = 1 / (1 + np.exp(-3 * X[:, 0]))
soft = np.column_stack([1 - p1, p1])

# at the root both label sets average out to nearly the same vector
print(node_proportions(hard), impurity(node_proportions(hard)))
print(node_proportions(soft), impurity(node_proportions(soft)))

# but the best split and the tree size depend on the mixing weight
for alpha in (1.0, 0.5, 0.0):
    labels = mix_labels(hard, soft, alpha)
    s = best_split(X, labels)
    t = fit(X, labels, TreeParams(min_leaf_size=2))
    print(f"alpha {alpha:.1f}: first split x <= {s.threshold:.3f}, {t.node_count} nodes")

# with alpha = 0 every row's pseudo-category follows the teacher, which is a
# clean threshold on x, so the tree stops once each side is pure
t = fit(X, mix_labels(hard, soft, 0.0), TreeParams(min_leaf_size=2))
print(t.feature[:t.node_count], t.threshold[t.feature >= 0])
