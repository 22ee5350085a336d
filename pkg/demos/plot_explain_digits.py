"""
Which pixels decide a prediction
================================

Fits a tree on the 8x8 digits bundled with scikit-learn and writes a PPM
image per test digit, with the pixels tested on its decision path in red.
"""

import os

import numpy as np
from sklearn.datasets import load_digits

from redt import TreeParams, explain, fit, one_hot
from redt.evaluation import overlay_ppm

digits = load_digits()
X, y = digits.data, digits.target
print(X.shape, np.bincount(y))

t = fit(X[:1400], one_hot(y[:1400], 10), TreeParams())
print(t.node_count, "nodes, depth", t.depth())
print("test accuracy %.3f" % np.mean(t.predict(X[1400:]) == y[1400:]))

os.makedirs("digit_overlays", exist_ok=True)
for i in range(1400, 1405):
    e = explain(t, X[i], row_index=i)
    print(e.format())
    with open(f"digit_overlays/row_{i}.ppm", "wb") as f:
        f.write(overlay_ppm(X[i], e.key_features, (8, 8)))

# key features as a mask over the image grid
mask = np.zeros(64, int)
mask[list(e.key_features)] = 1
print(mask.reshape(8, 8))
