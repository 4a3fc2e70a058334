import numpy as np
import pytest

from dlpls import dataset
from dlpls.dataset import ExpansionSpec
from dlpls.errors import DataError

from conftest import write_csv


def test_load_csv_outputs_by_name(tmp_path):
    path = write_csv(tmp_path / "d.csv", ["a", "b", "y"], [[1, 2, 3], [4, 5, 6]])
    t = dataset.load_csv(path, outputs="y")
    assert t.n == 2
    assert t.input_names == ["a", "b"]
    np.testing.assert_array_equal(t.y[:, 0], [3, 6])


def test_load_csv_semicolon_and_scientific(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text('"a";"quality"\n1e-3;5\n2.5E2;6\n')
    t = dataset.load_csv(path, outputs="quality", delimiter=";")
    np.testing.assert_allclose(t.x[:, 0], [1e-3, 250.0])


def test_load_csv_errors(tmp_path):
    with pytest.raises(FileNotFoundError):
        dataset.load_csv(tmp_path / "missing.csv")
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,x\n")
    with pytest.raises(DataError, match="non-numeric"):
        dataset.load_csv(bad)
    ok = write_csv(tmp_path / "ok.csv", ["a", "b"], [[1, 2]])
    with pytest.raises(DataError, match="unknown output"):
        dataset.load_csv(ok, outputs="zz")


def test_nonfinite_policy(tmp_path):
    path = tmp_path / "n.csv"
    path.write_text("a,b\n1,2\nnan,3\n4,5\n")
    with pytest.raises(DataError, match="non-finite"):
        dataset.load_csv(path)
    t = dataset.load_csv(path, nonfinite="drop")
    assert t.n == 2 and t.rejected_rows == 1


def test_header_only_gives_zero_rows(tmp_path):
    path = tmp_path / "e.csv"
    path.write_text("a,b\n")
    assert dataset.load_csv(path).n == 0


def test_transforms_and_domain_errors():
    t = dataset.RawTable(["a", "b"], np.array([[1.0, 4.0], [np.e, 9.0]]), [])
    out = dataset.apply_transforms(t, {"a": "log", "b": "sqrt"})
    np.testing.assert_allclose(out.values, [[0.0, 2.0], [1.0, 3.0]])
    assert out.column_names == ["log(a)", "sqrt(b)"]
    bad = dataset.RawTable(["a"], np.array([[1.0], [0.0]]), [])
    with pytest.raises(DataError, match="log domain violation at row 1"):
        dataset.apply_transforms(bad, {"a": "log"})
    with pytest.raises(DataError):
        dataset.apply_transforms(t, {"zz": "log"})


def test_parse_transform_spec():
    assert dataset.parse_transform_spec("a:log,b c:sqrt") == {"a": "log", "b c": "sqrt"}
    assert dataset.parse_transform_spec("wine") == dataset.WINE_TRANSFORMS
    assert dataset.parse_transform_spec(None) == {}
    with pytest.raises(DataError):
        dataset.parse_transform_spec("a:cube")


def test_expansion_counts_and_order():
    x = np.array([[1.0, 2.0, 3.0]])
    e = dataset.expand_features(x)
    np.testing.assert_array_equal(e, [[1, 2, 3, 1, 4, 9, 2, 3, 6]])
    assert dataset.expanded_names(["a", "b", "c"]) == ["a", "b", "c", "a^2", "b^2", "c^2", "a*b", "a*c", "b*c"]
    assert ExpansionSpec().n_columns(11) == 77
    assert dataset.expand_features(np.ones((4, 11))).shape == (4, 77)
    only_sq = ExpansionSpec(include_linear=False, include_pairwise_interactions=False)
    np.testing.assert_array_equal(dataset.expand_features(x, only_sq), [[1, 4, 9]])


def test_standardize_roundtrip_and_degenerate(rng):
    x = rng.standard_normal((20, 3)) * [1, 5, 0.1] + [0, 10, -3]
    x[:, 2] = 7.0
    s = dataset.standardize(x)
    np.testing.assert_allclose(s.values[:, :2].mean(axis=0), 0, atol=1e-12)
    np.testing.assert_allclose(s.values[:, :2].std(axis=0, ddof=1), 1, atol=1e-12)
    assert s.degenerate.tolist() == [False, False, True]
    np.testing.assert_allclose(dataset.destandardize(s), x, atol=1e-12)
    s2 = dataset.StandardizedMatrix.from_params(s.params())
    np.testing.assert_array_equal(s2.apply(x), s.values)


def test_standardize_no_rows():
    with pytest.raises(DataError, match="no rows"):
        dataset.standardize(np.empty((0, 3)))

