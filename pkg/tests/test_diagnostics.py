import numpy as np
import pytest

from dlpls import diagnostics, linalg
from dlpls.brillinger import fit_single_index
from dlpls.dataset import standardize
from dlpls.errors import DataError
from dlpls.pls import fit_pls


@pytest.mark.parametrize("mode", ["form", "covariance"])
def test_biplot_reproduces_rank_two(rng, mode):
    x = rng.standard_normal((40, 5))
    bp = diagnostics.biplot(x, mode=mode)
    xs = standardize(x).values
    np.testing.assert_allclose(bp.reconstruction(), linalg.truncated_approx(linalg.svd(xs), 2), atol=1e-10)
    assert len(bp.sample_rows()) == 40 and len(bp.variable_rows()) == 5


def test_biplot_duplicate_columns_colocate(rng):
    x = rng.standard_normal((30, 3))
    x = np.column_stack([x, x[:, 1]])
    bp = diagnostics.biplot(x, names=list("abcd"))
    np.testing.assert_allclose(bp.variable_coords[1], bp.variable_coords[3], atol=1e-10)


def test_biplot_rank_guard():
    x = np.outer(np.arange(10.0), [1.0, 2.0, 3.0])
    with pytest.raises(DataError, match="rank"):
        diagnostics.biplot(x)
    with pytest.raises(DataError):
        diagnostics.biplot(np.eye(3), mode="pca")


def test_correlation_circle_unit_disk(rng):
    x = rng.standard_normal((50, 6))
    y = x[:, :2] @ [[1.0, 0.5], [-1.0, 2.0]] + rng.standard_normal((50, 2))
    m = fit_pls(x, y, 2)
    cc = diagnostics.correlation_circle(x, y, m)
    assert np.all(cc.r1**2 + cc.r2**2 <= 1 + 1e-8)
    assert [r["group"] for r in cc.rows()] == ["X"] * 6 + ["Y"] * 2


def test_correlation_circle_score_variable(rng):
    x = rng.standard_normal((50, 4))
    y = x @ rng.standard_normal((4, 2))
    m = fit_pls(x, y, 2)
    # a variable equal to the first score sits at (1, 0)
    block = np.column_stack([m.x_scores[:, 0], np.full(50, 3.0)])
    cc = diagnostics.correlation_circle(block, y, m)
    np.testing.assert_allclose([cc.r1[0], cc.r2[0]], [1.0, 0.0], atol=1e-10)
    assert cc.constant[1] and cc.r1[1] == 0 and cc.r2[1] == 0


def test_correlation_circle_needs_two_components(rng):
    x = rng.standard_normal((20, 3))
    m = fit_pls(x, x[:, 0], 1)
    with pytest.raises(DataError):
        diagnostics.correlation_circle(x, x[:, 0], m)


def test_scale_factor_curves_properties(rng):
    x = rng.standard_normal((60, 4)) @ rng.standard_normal((4, 4))
    y = x @ rng.standard_normal(4) + rng.standard_normal(60)
    rows = diagnostics.scale_factor_curves(x, y, components=[1, 2])
    assert {r["method"] for r in rows} == {"PLS", "PCR", "RR"}
    pcr = np.array([r["f"] for r in rows if r["method"] == "PCR"])
    assert np.all(np.isclose(pcr, 0, atol=1e-10) | np.isclose(pcr, 1, atol=1e-10))
    rr = np.array([r["f"] for r in rows if r["method"] == "RR"])
    assert np.all((rr > 0) & (rr <= 1))
    assert len(rows) == 2 * 3 * 4


def test_scree_rows(rng):
    rows = diagnostics.scree_rows(rng.standard_normal((30, 4)), rng.standard_normal((30, 2)))
    assert len(rows) == 2
    assert rows[-1]["cumulative_share"] == pytest.approx(1.0)


def test_link_recovery_rows(rng):
    x = rng.standard_normal((80, 2))
    fit = fit_single_index(x, np.tanh(x[:, 0]))
    curve, scatter = diagnostics.link_recovery_rows(fit)
    assert len(curve) == 201 and len(scatter) == 80
