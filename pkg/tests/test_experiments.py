import numpy as np
import pytest

from dlpls import experiments


def test_stratified_split_per_class():
    labels = np.repeat([3, 5, 6], [10, 50, 40])
    train, test = experiments.stratified_split(labels, 0.2, seed=0)
    assert np.intersect1d(train, test).size == 0
    assert train.size + test.size == 100
    assert [np.sum(labels[test] == c) for c in (3, 5, 6)] == [2, 10, 8]
    again = experiments.stratified_split(labels, 0.2, seed=0)
    np.testing.assert_array_equal(test, again[1])


def test_adjusted_r2_hand_value():
    y = np.array([1.0, 2.0, 3.0, 4.0, 5.0])
    fitted = np.array([1.1, 1.9, 3.2, 3.8, 5.0])
    r2 = 1 - 0.1 / 10.0
    assert experiments.adjusted_r2(y, fitted, 2) == pytest.approx(1 - (1 - r2) * 4 / 2)


def test_rounding_accuracy():
    assert experiments.rounding_accuracy([5, 6, 7], [5.4, 6.6, 6.5]) == pytest.approx(1 / 3)


def test_independent_sim_checks_pass():
    rep = experiments.independent_sim(seed=0)
    assert rep.passed, [c for c in rep.checks if not c.passed]
    assert len(rep.tables["coefficients"]) == 4


def test_relu_tanh_small_run():
    rep = experiments.relu_tanh(n_seeds=5, stein_draws=100_000)
    assert {"relu_index", "tanh_index"} <= {k.split("k_")[-1] for k in rep.meta}
    assert len(rep.checks) == 4


def test_wine_pipeline_on_synthetic_layout(wine_like):
    rep = experiments.wine(wine_like, with_net=True)
    comp = rep.tables["comparison"]
    assert [(r["method"], r["variables"]) for r in comp] == [
        (m, v) for v in (11, 77) for m in ("OLS", "PCR", "PLS")
    ]
    assert len(rep.tables["scree_77"]) == 1
    cc = rep.tables["correlation_circle_11"]
    assert all(r["r1"] ** 2 + r["r2"] ** 2 <= 1 + 1e-8 for r in cc)
    assert {r["model"] for r in rep.tables["network"]} == {"network", "brillinger"}
    assert rep.meta["n_test"] == 120
    # OLS adj R^2 with all 77 columns is at least the 11-column value on training data
    r2 = {(r["method"], r["variables"]): r["adj_r2"] for r in comp}
    assert r2[("OLS", 77)] > r2[("OLS", 11)] - 0.05


def test_wine_missing_file_hint(tmp_path):
    with pytest.raises(FileNotFoundError, match="fetch_wine"):
        experiments.wine(tmp_path / "absent.csv")


def test_unknown_experiment():
    with pytest.raises(ValueError):
        experiments.run("orange-juice")
