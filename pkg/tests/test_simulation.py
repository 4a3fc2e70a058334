import numpy as np
import pytest

from dlpls import simulation
from dlpls.errors import DataError
from dlpls.simulation import SimSpec, generate


def test_two_output_zero_noise_values():
    x, y, truth = generate(SimSpec("two_output", n=5, seed=1, noise=np.zeros((2, 2))))
    x_probe = np.array([0.0, 0.0, 1.0, 1.0])
    assert x_probe @ truth.coefficients[0] == 4.0
    np.testing.assert_allclose(y[:, 0], x @ simulation.TWO_OUTPUT_B1, atol=1e-15)
    np.testing.assert_allclose(y[:, 1], np.log(np.abs(1 + x @ simulation.TWO_OUTPUT_B2)), atol=1e-15)


def test_log_abs_zero_input():
    assert np.log(np.abs(1 + np.zeros(4) @ simulation.LOG_ABS_B)) == 0.0
    x, y, _ = generate(SimSpec("log_abs", n=20, seed=0, noise=0.0))
    np.testing.assert_allclose(y[:, 0], np.log(np.abs(1 + x @ simulation.LOG_ABS_B)), atol=1e-15)


@pytest.mark.parametrize("scenario", simulation.SCENARIOS)
def test_deterministic(scenario):
    a = generate(SimSpec(scenario, n=50, seed=4))
    b = generate(SimSpec(scenario, n=50, seed=4))
    np.testing.assert_array_equal(a[0], b[0])
    np.testing.assert_array_equal(a[1], b[1])
    c = generate(SimSpec(scenario, n=50, seed=5))
    assert not np.array_equal(a[0], c[0])


@pytest.mark.parametrize("scenario", ["log_abs", "two_output"])
def test_predictor_covariance_is_identity(scenario):
    x, _, _ = generate(SimSpec(scenario, n=10_000, seed=0))
    assert np.linalg.norm(np.cov(x.T) - np.eye(4)) < 0.1


def test_index_truth_unit_norm():
    _, _, truth = generate(SimSpec("tanh_index", n=10, seed=3))
    assert truth.coefficients.shape == (1, 20)
    assert np.linalg.norm(truth.coefficients) == pytest.approx(1.0)


def test_psd_projection_of_printed_noise():
    cov, changed = simulation.nearest_psd(simulation.TWO_OUTPUT_NOISE)
    assert changed
    np.testing.assert_allclose(cov, [[0.003, 0.003], [0.003, 0.003]], atol=1e-15)
    _, _, truth = generate(SimSpec("two_output", n=5))
    assert truth.projected
    ok, changed = simulation.nearest_psd(np.eye(2))
    assert not changed


def test_noise_has_requested_covariance():
    cov = np.array([[0.5, 0.2], [0.2, 0.3]])
    x, y, _ = generate(SimSpec("two_output", n=20_000, seed=2, noise=cov))
    clean = np.column_stack(
        [x @ simulation.TWO_OUTPUT_B1, np.log(np.abs(1 + x @ simulation.TWO_OUTPUT_B2))]
    )
    np.testing.assert_allclose(np.cov((y - clean).T), cov, atol=0.02)


def test_spec_guards():
    with pytest.raises(DataError):
        SimSpec("spiral")
    with pytest.raises(DataError):
        SimSpec("log_abs", p=7)
    with pytest.raises(DataError):
        simulation.nearest_psd(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_fixtures_shapes():
    x, y = simulation.collinear_fixture()
    assert x.shape == (60, 3) and y.shape == (60,)
    assert np.corrcoef(x[:, 0], x[:, 1])[0, 1] > 0.95
    x, y, b2, b1 = simulation.deep_relu_data(n=100)
    assert x.shape == (100, 6) and y.shape == (100, 3) and b2.shape == (3, 6)
