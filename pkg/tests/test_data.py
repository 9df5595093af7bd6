import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from evosample.data import (
    Dataset,
    load_csv,
    make_synthetic,
    ordinal_encode,
    round_half_up,
    synthetic_mean,
    train_test_split,
)
from evosample.errors import (
    DegenerateSplitError,
    EmptyFileError,
    MissingColumnError,
    MissingFileError,
    MissingValueError,
    UnparseableCellError,
)
from evosample.tree import fit


def write(tmp_path, text, name="d.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_load_two_row_csv(tmp_path):
    ds = load_csv(write(tmp_path, "a,y\n1,2\n3,4\n"), "y")
    assert ds.features.tolist() == [[1.0], [3.0]]
    assert ds.target.tolist() == [2.0, 4.0]
    assert ds.feature_names == ("a",)


def test_target_removed_and_order_preserved(tmp_path):
    ds = load_csv(write(tmp_path, "b,y,a\n1,2,3\n4,5,6\n"), "y")
    assert ds.feature_names == ("b", "a")
    assert ds.features.tolist() == [[1, 3], [4, 6]]


def test_servo_like_categoricals(tmp_path):
    text = "motor,screw,pgain,vgain,class\nE,E,5,4,0.28\nB,D,6,5,0.5\nD,D,4,3,1.8\nB,A,3,2,2.5\n"
    ds = load_csv(write(tmp_path, text), "class")
    assert ds.n_cols == 4
    assert ds.features[:, 0].tolist() == [2, 0, 1, 0]  # B < D < E
    assert ds.features[:, 1].tolist() == [2, 1, 1, 0]


def test_boston_shape():
    import pathlib

    path = pathlib.Path(__file__).resolve().parents[1] / "data" / "boston.csv"
    ds = load_csv(path, "MEDV")
    assert (ds.n_rows, ds.n_cols) == (506, 12)


@pytest.mark.parametrize(
    "text, target, error",
    [
        ("a,y\n1,2\nx,4\n", "y", UnparseableCellError),
        ("a,y\n1,2\n,4\n", "y", MissingValueError),
        ("a,y\n1,2\n?,4\n", "y", MissingValueError),
        ("a,y\n1,2\n3,4\n", "z", MissingColumnError),
        ("", "y", EmptyFileError),
        ("a,y\n1,2\n", "y", EmptyFileError),
        ("a,y\n1,p\n3,q\n", "y", UnparseableCellError),
    ],
)
def test_load_errors(tmp_path, text, target, error):
    with pytest.raises(error):
        load_csv(write(tmp_path, text), target)


def test_missing_file(tmp_path):
    with pytest.raises(MissingFileError):
        load_csv(tmp_path / "nope.csv", "y")


@pytest.mark.parametrize(
    "raw, expected",
    [
        (["B", "A", "B", "C"], [1, 0, 1, 2]),
        (["x", "x", "x"], [0, 0, 0]),
        # text order "30" < "4" < "5"
        (["5", "30", "4"], [2, 0, 1]),
    ],
)
def test_ordinal_encode(raw, expected):
    assert ordinal_encode(raw).tolist() == expected


@given(st.lists(st.text(max_size=3), min_size=1, max_size=20), st.randoms())
def test_ordinal_encode_ignores_row_order(values, rnd):
    shuffled = list(values)
    rnd.shuffle(shuffled)
    a = dict(zip(values, ordinal_encode(values)))
    b = dict(zip(shuffled, ordinal_encode(shuffled)))
    assert a == b


def _dataset(n):
    return Dataset(np.arange(n, dtype=float)[:, None], np.arange(n, dtype=float), ("x",))


@pytest.mark.parametrize("n, frac", [(506, 0.10), (4177, 0.25), (167, 0.10), (10, 0.15)])
def test_split_counts(n, frac):
    # Enumerate half-up rounding independently of round_half_up.
    expected = math.floor(frac * n) + (1 if frac * n - math.floor(frac * n) >= 0.5 else 0)
    split = train_test_split(_dataset(n), frac, np.random.default_rng(0))
    assert split.test.n_rows == expected
    assert split.train.n_rows == n - expected


def test_split_known_counts():
    assert train_test_split(_dataset(506), 0.1, np.random.default_rng(1)).test.n_rows == 51
    assert train_test_split(_dataset(4177), 0.25, np.random.default_rng(1)).test.n_rows == 1044


@given(st.integers(2, 300), st.floats(0.01, 0.99), st.integers(0, 2**32))
def test_split_partitions_rows(n, frac, seed):
    n_test = round_half_up(frac * n)
    ds = _dataset(n)
    if n_test < 1 or n_test > n - 1:
        with pytest.raises(DegenerateSplitError):
            train_test_split(ds, frac, np.random.default_rng(seed))
        return
    split = train_test_split(ds, frac, np.random.default_rng(seed))
    rows = sorted(split.train.target.tolist() + split.test.target.tolist())
    assert rows == list(range(n))
    assert not set(split.train_rows) & set(split.test_rows)


def test_split_deterministic():
    a = train_test_split(_dataset(50), 0.2, np.random.default_rng(9))
    b = train_test_split(_dataset(50), 0.2, np.random.default_rng(9))
    assert a.test_rows.tolist() == b.test_rows.tolist()


@pytest.mark.parametrize("frac", [0.0, 1.0, 0.01])
def test_split_degenerate(frac):
    with pytest.raises(DegenerateSplitError):
        train_test_split(_dataset(10), frac, np.random.default_rng(0))


def test_synthetic_deterministic():
    a = make_synthetic(20, 3, 0.1, np.random.default_rng(4))
    b = make_synthetic(20, 3, 0.1, np.random.default_rng(4))
    assert np.array_equal(a.features, b.features) and np.array_equal(a.target, b.target)


def test_synthetic_step_fits_exactly():
    ds = make_synthetic(50, 1, 0.0, np.random.default_rng(2))
    tree = fit(ds, np.arange(ds.n_rows), [0], max_depth=1)
    assert np.allclose(tree.predict(ds.features), ds.target)


def test_synthetic_noise_variance():
    variances = []
    for seed in range(20):
        ds = make_synthetic(1000, 3, 0.1, np.random.default_rng(seed))
        variances.append(np.var(ds.target - synthetic_mean(ds.features), ddof=1))
    assert all(abs(v - 0.01) <= 0.2 * 0.01 for v in variances)


def test_dataset_rejects_nonfinite():
    from evosample.errors import DataError

    with pytest.raises(DataError):
        Dataset(np.array([[np.nan]]), np.array([1.0]), ("x",))
