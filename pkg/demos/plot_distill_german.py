"""
Distilling a forest into one tree on the German credit data
===========================================================

Soft labels come from a random forest evaluated out of fold, repeated over
several shuffles. The tree is then grown on a blend of those and the true
labels, with the blend weight picked on a holdout.
"""

import numpy as np
from redt import (AlphaGrid, CvParams, RandomForestTeacher, SplitSpec, TreeParams,
                  cv_soft_labels, fit, grid_search_alpha, load_benchmark, mix_labels,
                  one_hot, train_test_split)
from redt.evaluation import accuracy

ds = load_benchmark("german")
print(ds.n_samples, "rows,", ds.n_features, "features,", ds.class_names)

train, test = train_test_split(ds, SplitSpec(0.7, seed=3))
Xtr, ytr = ds.features[train], ds.labels[train]
Xte, yte = ds.features[test], ds.labels[test]

# 5 x 5-fold out-of-fold forest probabilities for the training rows
soft = cv_soft_labels(Xtr, ytr, RandomForestTeacher(), CvParams(5, 5, seed=3), 2)
print("mean teacher fold accuracy %.3f" % np.mean(soft.fold_accuracies))

# where the teacher disagrees with the truth
flipped = np.argmax(soft.values, axis=1) != ytr
print(flipped.sum(), "training rows where the forest votes against the label")

search = grid_search_alpha(Xtr, ytr, soft, AlphaGrid(), TreeParams(), seed=3)
for s in search.scores:
    print(f"  alpha {s.alpha:.1f}  holdout acc {s.accuracy:.3f}  nodes {s.node_count}")
print("alpha* =", search.alpha_star)

hard = one_hot(ytr, 2)
dt = fit(Xtr, hard, TreeParams())
redt = fit(Xtr, mix_labels(hard, soft, search.alpha_star), TreeParams())
print(f"DT   {accuracy(dt.predict(Xte), yte):.3f} with {dt.node_count} nodes")
print(f"ReDT {accuracy(redt.predict(Xte), yte):.3f} with {redt.node_count} nodes")
