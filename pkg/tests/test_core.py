import numpy as np
import pytest

from mmdselect.core import (
    DataFormatError,
    RandomSource,
    SelectionVector,
    TwoSampleData,
    derive_stream,
    load_two_sample,
    save_two_sample,
    split_train_test,
)


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return str(p)


def test_load_two_sample_basic(tmp_path):
    px = write(tmp_path, "x.csv", "1,0\n3,0\n")
    py = write(tmp_path, "y.csv", "0,2\n0,4\n")
    data = load_two_sample(px, py)
    assert data.n == 2 and data.m == 2 and data.dim == 2
    assert np.array_equal(data.X, [[1, 0], [3, 0]])
    assert np.array_equal(data.Y, [[0, 2], [0, 4]])


def test_load_header_autodetect(tmp_path):
    px = write(tmp_path, "x.csv", "alpha,beta\n1,2\n3,4\n")
    py = write(tmp_path, "y.csv", "5,6\n")
    data = load_two_sample(px, py)
    assert data.n == 2 and data.X[1, 1] == 4.0


def test_load_ragged_rows_error(tmp_path):
    px = write(tmp_path, "x.csv", "1,2\n1,2,3\n")
    py = write(tmp_path, "y.csv", "1,2\n")
    with pytest.raises(DataFormatError, match="row 2"):
        load_two_sample(px, py)


def test_load_empty_file_error_names_path(tmp_path):
    px = write(tmp_path, "x.csv", "1,2\n")
    py = write(tmp_path, "y.csv", "")
    with pytest.raises(DataFormatError, match="y.csv"):
        load_two_sample(px, py)


def test_load_non_numeric_cell_location(tmp_path):
    px = write(tmp_path, "x.csv", "1,2\n3,oops\n")
    py = write(tmp_path, "y.csv", "1,2\n")
    with pytest.raises(DataFormatError, match="row 2, column 2"):
        load_two_sample(px, py)


def test_load_cross_file_dimension_mismatch(tmp_path):
    px = write(tmp_path, "x.csv", "1,2\n")
    py = write(tmp_path, "y.csv", "1,2,3\n")
    with pytest.raises(DataFormatError, match="dimension mismatch"):
        load_two_sample(px, py)


def test_round_trip_bit_exact(tmp_path):
    gen = np.random.default_rng(0)
    data = TwoSampleData(gen.standard_normal((7, 4)) * 1e3, gen.standard_normal((5, 4)) / 1e3)
    px, py = str(tmp_path / "x.csv"), str(tmp_path / "y.csv")
    save_two_sample(data, px, py)
    back = load_two_sample(px, py)
    assert np.array_equal(back.X, data.X)
    assert np.array_equal(back.Y, data.Y)


def test_two_sample_validation():
    with pytest.raises(ValueError, match="column mismatch"):
        TwoSampleData(np.zeros((2, 3)), np.zeros((2, 2)))
    with pytest.raises(ValueError, match="finite"):
        TwoSampleData(np.array([[np.nan, 1.0]]), np.zeros((1, 2)))
    with pytest.raises(ValueError, match="at least one sample"):
        TwoSampleData(np.zeros((0, 2)), np.zeros((1, 2)))


def test_split_sizes_and_partition():
    gen = np.random.default_rng(3)
    data = TwoSampleData(gen.standard_normal((4, 2)), gen.standard_normal((4, 2)))
    train, test = split_train_test(data, 0.5, RandomSource(11))
    assert train.n == 2 and train.m == 2 and test.n == 2 and test.m == 2
    # union reproduces the input multiset per group
    for part, whole in ((np.vstack([train.X, test.X]), data.X), (np.vstack([train.Y, test.Y]), data.Y)):
        got = sorted(map(tuple, part))
        want = sorted(map(tuple, whole))
        assert got == want
    # rows are disjoint between the parts (all rows distinct here)
    as_set = set(map(tuple, train.X))
    assert not as_set & set(map(tuple, test.X))


def test_split_deterministic():
    gen = np.random.default_rng(5)
    data = TwoSampleData(gen.standard_normal((9, 3)), gen.standard_normal((6, 3)))
    a_train, a_test = split_train_test(data, 0.4, RandomSource(7, 3))
    b_train, b_test = split_train_test(data, 0.4, RandomSource(7, 3))
    assert np.array_equal(a_train.X, b_train.X)
    assert np.array_equal(a_test.Y, b_test.Y)


def test_split_empty_part_error():
    data = TwoSampleData(np.zeros((1, 2)), np.zeros((4, 2)))
    with pytest.raises(ValueError, match="empty part"):
        split_train_test(data, 0.5, RandomSource(0))


def test_derive_stream_labels_distinct_and_stable():
    root = RandomSource(42)
    a = derive_stream(root, 0)
    b = derive_stream(root, 1)
    assert a.stream_id != b.stream_id
    assert derive_stream(root, 0) == a
    x = a.generator().standard_normal(8)
    assert np.array_equal(x, derive_stream(root, 0).generator().standard_normal(8))


def test_sibling_streams_uncorrelated():
    root = RandomSource(2024)
    u = derive_stream(root, 10).generator().standard_normal(10_000)
    v = derive_stream(root, 11).generator().standard_normal(10_000)
    rho = float(np.corrcoef(u, v)[0, 1])
    assert abs(rho) < 0.05


def test_selection_vector_invariants():
    z = np.array([0.6, 0.8, 0.0])
    sel = SelectionVector(z, d=2)
    assert sel.support == (0, 1)
    with pytest.raises(ValueError, match="unit norm"):
        SelectionVector(np.array([0.5, 0.5, 0.0]), d=2)
    with pytest.raises(ValueError, match="exceeds budget"):
        SelectionVector(np.ones(4) / 2.0, d=2)
    with pytest.raises(ValueError, match="finite"):
        SelectionVector(np.array([np.inf, 0.0]), d=1)


def test_selection_vector_immutable():
    sel = SelectionVector(np.array([1.0, 0.0]), d=1)
    with pytest.raises(ValueError):
        sel.z[0] = 2.0
