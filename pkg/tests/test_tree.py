import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from redt import tree
from redt.data import one_hot
from redt.reference import fit_cart
from redt.tree import TreeParams

from conftest import random_mixed_labels
from oracles import exhaustive_best_split, split_decrease


def test_node_proportions_examples():
    assert np.allclose(tree.node_proportions([[0.8, 0.2], [0.4, 0.6]]), [0.6, 0.4])
    assert tree.node_proportions([[0.0, 1.0]]).tolist() == [0.0, 1.0]
    rows = one_hot([0] * 30 + [1] * 70, 2)
    assert np.allclose(tree.node_proportions(rows), [0.3, 0.7])


def test_node_proportions_rejects_empty():
    with pytest.raises(ValueError):
        tree.node_proportions(np.zeros((0, 2)))


def test_impurity_examples():
    assert tree.impurity([0.5, 0.5], "gini") == 0.5
    assert tree.impurity([1, 0], "gini") == 0
    assert tree.impurity([1, 0], "entropy") == 0
    assert tree.impurity([0.25] * 4, "entropy") == 2.0


def test_impurity_decrease_perfect_split():
    parent = [[1, 0], [0, 1]]
    assert tree.impurity_decrease(parent, [[1, 0]], [[0, 1]]) == 0.5


def test_impurity_decrease_identical_rows_is_zero():
    rows = np.tile([0.3, 0.7], (5, 1))
    assert abs(tree.impurity_decrease(rows, rows[:2], rows[2:])) < 1e-15


def test_impurity_decrease_rejects_empty_child():
    with pytest.raises(ValueError, match="empty child"):
        tree.impurity_decrease([[1, 0]], np.zeros((0, 2)), [[1, 0]])


# 6-row mixed-label node; expected values from oracles.exhaustive_best_split
SIX_X = np.array([[6.8, 2.1], [3.1, 8.0], [10.0, 1.4], [0.8, 1.8], [3.6, 1.7], [5.9, 6.2]])
SIX_Y = np.array([[0.377, 0.622, 0.001], [0.015, 0.584, 0.401], [0.473, 0.458, 0.069],
                  [0.528, 0.281, 0.191], [0.07, 0.067, 0.863], [0.44, 0.429, 0.131]])


def test_six_row_best_split_frozen():
    s = tree.best_split(SIX_X, SIX_Y, TreeParams(min_leaf_size=1))
    assert (s.feature, s.threshold) == (0, 4.75)
    assert abs(s.decrease - 0.06566038888888898) < 1e-12
    mask = SIX_X[:, 0] <= 4.75
    assert abs(tree.impurity_decrease(SIX_Y, SIX_Y[mask], SIX_Y[~mask]) - s.decrease) < 1e-12


def test_best_split_perfect():
    X = np.array([[1.0], [2.0], [3.0], [4.0]])
    s = tree.best_split(X, one_hot([0, 0, 1, 1], 2))
    assert s == (0, 2.5, 0.5)


def test_best_split_constant_feature_is_none():
    X = np.ones((6, 2))
    assert tree.best_split(X, one_hot([0, 1, 0, 1, 0, 1], 2)) is None


def test_best_split_tie_prefers_lower_feature():
    X = np.array([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0], [4.0, 4.0]])
    assert tree.best_split(X, one_hot([0, 0, 1, 1], 2)).feature == 0


def test_best_split_random_20x3_matches_oracle():
    rng = np.random.default_rng(7)
    X = rng.normal(size=(20, 3))
    Y = random_mixed_labels(rng, 20, 3)
    s = tree.best_split(X, Y)
    f, t, d = exhaustive_best_split(X, Y)
    assert (s.feature, s.threshold) == (f, t)
    assert abs(s.decrease - d) < 1e-12


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["gini", "entropy"]))
def test_best_split_matches_oracle_property(seed, criterion):
    rng = np.random.default_rng(seed)
    n = rng.integers(2, 31)
    X = rng.integers(0, 6, size=(n, rng.integers(1, 5))).astype(float)
    Y = random_mixed_labels(rng, n, rng.integers(2, 4))
    got = tree.best_split(X, Y, TreeParams(criterion=criterion))
    want = exhaustive_best_split(X, Y, criterion)
    if want is None:
        assert got is None
    else:
        assert (got.feature, got.threshold) == want[:2]
        assert abs(got.decrease - want[2]) < 1e-12


def test_pseudo_category():
    assert tree.pseudo_category([0.3, 0.7]) == 1
    assert tree.pseudo_category([0.5, 0.5]) == 0
    assert tree.pseudo_category([1, 0, 0]) == 0


def test_fit_separable_depth_one():
    X = np.array([[0.0], [1.0], [2.0], [3.0]])
    t = tree.fit(X, one_hot([0, 0, 1, 1], 2), TreeParams(min_leaf_size=1))
    assert t.node_count == 3 and t.depth() == 1
    assert t.value[t.leaves].tolist() == [[1, 0], [0, 1]]


def test_fit_pure_pseudo_categories_gives_single_leaf():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(40, 3))
    Y = np.column_stack([rng.uniform(0.6, 1.0, 40), np.zeros(40)])
    Y[:, 1] = 1 - Y[:, 0]
    t = tree.fit(X, Y, TreeParams(min_leaf_size=1))
    assert t.node_count == 1
    assert np.allclose(t.value[0], Y.mean(axis=0))


def test_fit_duplicate_rows_with_conflicting_labels_terminates():
    X = np.zeros((10, 2))
    t = tree.fit(X, one_hot([0, 1] * 5, 2), TreeParams(min_leaf_size=1))
    assert t.node_count == 1


def test_fit_dimension_mismatch():
    with pytest.raises(ValueError, match="dimension mismatch"):
        tree.fit(np.zeros((3, 2)), np.ones((4, 2)) / 2)


def test_alpha_one_matches_reference_cart_on_german(german):
    t = tree.fit(german.features, one_hot(german), TreeParams())
    ref = fit_cart(german.features, german.labels, german.class_count, TreeParams())
    assert tree.dumps(t) == tree.dumps(ref)


def _leaf_rows(t, X):
    return t.apply(X)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 6))
def test_tree_structure_invariants(seed, min_leaf):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 80))
    X = rng.integers(0, 8, size=(n, 3)).astype(float)
    Y = random_mixed_labels(rng, n, 3)
    t = tree.fit(X, Y, TreeParams(min_leaf_size=min_leaf))
    pseudo = np.argmax(Y, axis=1)
    members = [[] for _ in range(t.node_count)]
    for i, x in enumerate(X):
        node = 0
        members[0].append(i)
        while not t.is_leaf(node):
            node = t.left[node] if x[t.feature[node]] <= t.threshold[node] else t.right[node]
            members[node].append(i)
    # leaf partition and sample counts
    assert t.sample_count[t.leaves].sum() == n
    for i in range(t.node_count):
        assert len(members[i]) == t.sample_count[i] >= 1
        assert abs(t.value[i].sum() - 1) < 1e-9
        assert np.allclose(t.value[i], Y[members[i]].mean(axis=0), atol=1e-12)
        if t.is_leaf(i):
            rows = members[i]
            small = len(rows) <= min_leaf
            pure = len(set(pseudo[rows])) == 1
            no_split = tree.best_split(X, Y, rows=rows) is None
            assert small or pure or no_split
        else:
            assert len(members[i]) > min_leaf
            assert len(set(pseudo[members[i]])) > 1
            assert t.sample_count[t.left[i]] + t.sample_count[t.right[i]] == t.sample_count[i]
            # each internal split is the best split of its members
            s = tree.best_split(X, Y, rows=members[i])
            assert (s.feature, s.threshold) == (t.feature[i], t.threshold[i])
            mask = X[members[i], s.feature] <= s.threshold
            assert abs(split_decrease(Y[members[i]], mask, "gini") - s.decrease) < 1e-12


def test_fit_is_deterministic():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(200, 6))
    Y = random_mixed_labels(rng, 200, 3)
    p = TreeParams(seed=99, feature_subsample=2)
    assert tree.dumps(tree.fit(X, Y, p)) == tree.dumps(tree.fit(X, Y, p))
    assert tree.dumps(tree.fit(X, Y, p)) != tree.dumps(tree.fit(X, Y, TreeParams(seed=1, feature_subsample=2)))


def test_predict_single_leaf():
    t = tree.fit(np.zeros((4, 1)), np.tile([0.6, 0.4], (4, 1)))
    assert np.allclose(tree.predict_distribution(t, [123.0]), [0.6, 0.4])
    assert tree.predict_label(t, [-5.0]) == 0


def test_predict_tie_goes_to_lowest_class():
    t = tree.fit(np.zeros((2, 1)), np.tile([0.5, 0.5], (2, 1)))
    assert tree.predict_label(t, [0.0]) == 0


def test_threshold_value_goes_left():
    X = np.array([[0.0], [1.0]])
    t = tree.fit(X, one_hot([0, 1], 2), TreeParams(min_leaf_size=1))
    assert t.threshold[0] == 0.5
    assert tree.predict_label(t, [0.5]) == 0
    assert tree.predict_label(t, [np.nextafter(0.5, 1)]) == 1


def test_adjacent_float_threshold_keeps_partition():
    a = 1.0
    b = np.nextafter(a, 2.0)
    X = np.array([[a], [b]])
    t = tree.fit(X, one_hot([0, 1], 2), TreeParams(min_leaf_size=1))
    assert t.predict(X).tolist() == [0, 1]


def test_node_count_full_tree():
    X = np.arange(8, dtype=float)[:, None]
    t = tree.fit(X, one_hot([0, 1, 0, 1, 0, 1, 0, 1], 2), TreeParams(min_leaf_size=1))
    assert tree.node_count(t) == 2 * t.leaves.size - 1
    single = tree.fit(X, one_hot([0] * 8, 2))
    assert tree.node_count(single) == 1


def test_predict_rows_sum_to_one_and_match_argmax(crx):
    rng = np.random.default_rng(1)
    Y = random_mixed_labels(rng, crx.n_samples, 2)
    t = tree.fit(crx.features, Y)
    P = t.predict_proba(crx.features)
    assert np.allclose(P.sum(axis=1), 1, atol=1e-9)
    assert np.array_equal(t.predict(crx.features), np.argmax(P, axis=1))
    for x, p in zip(crx.features[:20], P[:20]):
        assert tree.predict_label(t, x) == int(np.argmax(p))


def test_predict_wrong_width():
    t = tree.fit(np.zeros((3, 2)), one_hot([0, 1, 0], 2))
    with pytest.raises(ValueError, match="D=2"):
        t.predict(np.zeros((1, 3)))


def test_serialization_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    X = rng.normal(size=(150, 4)) * 1e3
    Y = random_mixed_labels(rng, 150, 3)
    t = tree.fit(X, Y, TreeParams(min_leaf_size=2))
    path = tmp_path / "t.json"
    tree.save(t, path, metadata={"alpha": 0.3})
    back, meta = tree.load(path)
    assert meta == {"alpha": 0.3}
    assert tree.dumps(back) == tree.dumps(t)
    Z = rng.normal(size=(500, 4)) * 1e3
    assert np.array_equal(back.predict_proba(Z), t.predict_proba(Z))
    assert np.array_equal(back.threshold, t.threshold)


def test_serialization_format_is_self_describing():
    t = tree.fit(np.array([[0.0], [1.0]]), one_hot([0, 1], 2), TreeParams(min_leaf_size=1))
    lines = tree.dumps(t).splitlines()
    assert '"format": "redt-tree"' in lines[0] and '"version": 1' in lines[0]
    assert len(lines) == 1 + t.node_count
    assert '"parent": 0' in lines[2]


def test_load_rejects_unknown_version():
    text = tree.dumps(tree.fit(np.zeros((2, 1)), one_hot([0, 1], 2))).replace(
        '"version": 1', '"version": 99')
    with pytest.raises(ValueError, match="version"):
        tree.loads(text)
