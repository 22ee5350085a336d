import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from redt.data import (DataError, Dataset, SplitSpec, load_csv, one_hot, read_features,
                       train_test_split, write_csv)


def write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_first_appearance_class_encoding(tmp_path):
    path = write(tmp_path, "x,y\n1,yes\n2,no\n3,yes\n")
    ds = load_csv(path, label_col="y")
    assert ds.class_count == 2
    assert ds.labels.tolist() == [0, 1, 0]
    assert ds.class_names == ("yes", "no")


def test_categorical_columns_are_coded_by_first_appearance(tmp_path):
    path = write(tmp_path, "c,x,y\nb,1.5,p\na,2,q\nb,3,p\n")
    ds = load_csv(path, label_col=-1, categorical=["c"])
    assert ds.features[:, 0].tolist() == [0, 1, 0]
    assert ds.categories == {0: ("b", "a")}
    assert ds.feature_names == ("c", "x")


def test_label_column_by_index_without_header(tmp_path):
    path = write(tmp_path, "A,1,0.5\nB,2,0.25\n")
    ds = load_csv(path, label_col=0, header=False)
    assert ds.class_names == ("A", "B")
    assert ds.features.tolist() == [[1, 0.5], [2, 0.25]]


@pytest.mark.parametrize("cell", ["?", "", "NA"])
def test_missing_value_is_an_error(tmp_path, cell):
    path = write(tmp_path, f"x,y\n1,a\n{cell},b\n")
    with pytest.raises(DataError, match="unparseable cell"):
        load_csv(path)


def test_text_in_numeric_column_is_an_error(tmp_path):
    with pytest.raises(DataError, match="unparseable cell"):
        load_csv(write(tmp_path, "x,y\n1,a\nfoo,b\n"))


def test_infinite_value_is_an_error(tmp_path):
    with pytest.raises(DataError):
        load_csv(write(tmp_path, "x,y\n1,a\ninf,b\n"))


def test_single_class_is_an_error(tmp_path):
    with pytest.raises(DataError, match="single distinct value"):
        load_csv(write(tmp_path, "x,y\n1,a\n2,a\n"))


def test_empty_and_missing_files(tmp_path):
    with pytest.raises(DataError, match="empty"):
        load_csv(write(tmp_path, ""))
    with pytest.raises(DataError, match="empty"):
        load_csv(write(tmp_path, "x,y\n"))
    with pytest.raises(FileNotFoundError):
        load_csv(str(tmp_path / "nope.csv"))


def test_bundled_datasets_shapes(crx, german, cmc):
    # crx: the KEEL copy has the 37 rows with missing values removed (690 -> 653)
    assert (crx.n_samples, crx.n_features, crx.class_count) == (653, 15, 2)
    assert (german.n_samples, german.n_features, german.class_count) == (1000, 20, 2)
    assert (cmc.n_samples, cmc.n_features, cmc.class_count) == (1473, 9, 3)


def test_one_hot_small():
    assert one_hot([0, 1], 2).tolist() == [[1, 0], [0, 1]]
    assert one_hot([2], 3).tolist() == [[0, 0, 1]]


def test_one_hot_column_sums_match_raw_class_counts(crx):
    # count classes straight from the bundled file
    from redt.data import benchmark_path
    with open(benchmark_path("crx")) as f:
        raw = [line.strip().rsplit(",", 1)[1] for line in f.readlines()[1:] if line.strip()]
    counts = [raw.count(name) for name in crx.class_names]
    H = one_hot(crx)
    assert H.shape == (653, 2)
    assert H.sum(axis=0).tolist() == counts
    assert np.all(H.sum(axis=1) == 1.0)


def test_split_sizes_and_disjointness():
    train, test = train_test_split(10, SplitSpec(0.7, seed=3))
    assert len(train) == 7 and len(test) == 3
    assert set(train).isdisjoint(test)
    assert sorted(set(train) | set(test)) == list(range(10))


def test_split_is_deterministic():
    a = train_test_split(50, SplitSpec(0.7, seed=11))
    b = train_test_split(50, SplitSpec(0.7, seed=11))
    assert all(np.array_equal(x, y) for x, y in zip(a, b))


def test_split_690_rows():
    train, test = train_test_split(690, SplitSpec(0.7, seed=0))
    assert (len(train), len(test)) == (483, 207)


def test_split_seeds_give_distinct_partitions():
    parts = {tuple(train_test_split(30, SplitSpec(0.7, seed=s))[0]) for s in range(100)}
    assert len(parts) >= 99


def test_split_rejects_empty_side():
    with pytest.raises(ValueError):
        train_test_split(2, SplitSpec(0.1))
    with pytest.raises(ValueError):
        train_test_split(1, SplitSpec(0.5))


def test_read_features_reports_expected_width(tmp_path):
    path = write(tmp_path, "a,b,c\n1,2,3\n")
    with pytest.raises(DataError, match="D=2"):
        read_features(path, 2)
    X = read_features(path, 2, drop_col="c")
    assert X.tolist() == [[1.0, 2.0]]


@st.composite
def datasets(draw):
    n = draw(st.integers(2, 12))
    d = draw(st.integers(1, 4))
    k = draw(st.integers(2, 4))
    vals = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)
    X = np.array(draw(st.lists(st.lists(vals, min_size=d, max_size=d), min_size=n, max_size=n)))
    labels = list(range(k)) + draw(st.lists(st.integers(0, k - 1), min_size=n, max_size=n))
    labels = np.array(labels[:max(n, k)])
    if len(labels) > n:
        X = np.vstack([X, np.zeros((len(labels) - n, d))])
    cat = draw(st.booleans())
    categories = {}
    if cat:
        # codes in first-appearance order so that reading back reproduces them
        col = draw(st.lists(st.integers(0, 2), min_size=len(labels), max_size=len(labels)))
        seen = []
        for c in col:
            if c not in seen:
                seen.append(c)
        X[:, 0] = [seen.index(c) for c in col]
        categories = {0: tuple(f"cat{c}" for c in seen)}
    return Dataset(X, labels, k, [f"f{j}" for j in range(d)], [f"c{i}" for i in range(k)],
                   categories)


@settings(max_examples=40, deadline=None)
@given(datasets())
def test_csv_round_trip(tmp_path_factory, ds):
    path = str(tmp_path_factory.mktemp("rt") / "d.csv")
    write_csv(ds, path)
    back = load_csv(path, label_col=-1, categorical=[0] if ds.categories else [])
    assert back == ds


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(0, 5), min_size=1, max_size=40))
def test_one_hot_rows_sum_to_one(labels):
    H = one_hot(labels, 6)
    assert np.all(H.sum(axis=1) == 1.0)
    assert np.array_equal(np.argmax(H, axis=1), labels)
