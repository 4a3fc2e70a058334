"""Single-index estimation by OLS plus link smoothing, and layer-by-layer
OLS estimation of deep ReLU networks.

Under Gaussian regressors, OLS of y on x converges to ``k * beta`` for
``E[y|x] = g(alpha + beta'x)``, with ``k = cov(g(v), v) / var(v)``. The link
is then recovered by smoothing y against the fitted index.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import make_smoothing_spline

from . import linalg
from .errors import DataError, NumericalError

SMOOTHERS = ("local-linear", "spline")


def plugin_bandwidth(index) -> float:
    index = np.asarray(index, dtype=float)
    return 1.06 * index.std(ddof=1) * index.shape[0] ** (-0.2)


def local_linear(u, y, points, bandwidth: float, chunk: int = 512) -> np.ndarray:
    """Gaussian-kernel local-linear regression of y on u, evaluated at ``points``."""
    u = np.asarray(u, dtype=float)
    y = np.asarray(y, dtype=float)
    points = np.atleast_1d(np.asarray(points, dtype=float))
    out = np.empty(points.shape[0])
    for start in range(0, points.shape[0], chunk):
        pts = points[start:start + chunk]
        d = u[None, :] - pts[:, None]
        w = np.exp(-0.5 * (d / bandwidth) ** 2)
        s0 = w.sum(axis=1)
        s1 = (w * d).sum(axis=1)
        s2 = (w * d * d).sum(axis=1)
        t0 = w @ y
        t1 = (w * d) @ y
        den = s0 * s2 - s1 * s1
        # Far outside the data the local fit degenerates; fall back to local mean.
        ok = den > 1e-12 * np.maximum(s0 * s2, 1e-300)
        val = np.where(ok, (s2 * t0 - s1 * t1) / np.where(ok, den, 1.0), t0 / np.maximum(s0, 1e-300))
        out[start:start + chunk] = val
    return out


def _ols_intercept(x, y):
    xm = x.mean(axis=0)
    ym = y.mean(axis=0)
    coef = linalg.ols(x - xm, y - ym)
    return coef, ym - xm @ coef


@dataclass(frozen=True)
class SingleIndexFit:
    beta_hat: np.ndarray
    intercept: float
    index: np.ndarray
    y: np.ndarray
    smoother: str
    bandwidth: float
    grid: np.ndarray
    link_values: np.ndarray
    spline: object = field(default=None, repr=False, compare=False)

    @property
    def n_used(self) -> int:
        return self.index.shape[0]

    def link(self, u) -> np.ndarray:
        """Evaluate the recovered link at index values u."""
        u = np.asarray(u, dtype=float)
        if self.smoother == "spline":
            return self.spline(u)
        return local_linear(self.index, self.y, u.ravel(), self.bandwidth).reshape(u.shape)

    def predict(self, x) -> np.ndarray:
        return self.link(np.asarray(x, dtype=float) @ self.beta_hat)

    def central_grid(self, coverage: float = 0.8, size: int = 201) -> np.ndarray:
        """Grid over the central ``coverage`` quantile range of the fitted index."""
        tail = (1 - coverage) / 2
        lo, hi = np.quantile(self.index, [tail, 1 - tail])
        return np.linspace(lo, hi, size)

    def recovery_rows(self) -> tuple[list[dict], list[dict]]:
        """Data behind the recovery plot: the smoothed curve and the raw scatter."""
        curve = [{"u": float(a), "g_hat": float(b)} for a, b in zip(self.grid, self.link_values)]
        scatter = [{"index": float(a), "y": float(b)} for a, b in zip(self.index, self.y)]
        return curve, scatter


def fit_single_index(
    x,
    y,
    bandwidth: float | str = "plugin",
    smoother: str = "local-linear",
    grid_size: int = 201,
) -> SingleIndexFit:
    """Estimate ``E[y|x] = g(beta'x)`` by OLS direction plus a smoothed link.

    The proportionality constant k is not separated out: the returned link
    acts on the OLS index, i.e. approximates ``g(alpha + u / k)``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    n, p = x.shape
    if n <= p:
        raise DataError(f"need n > p for the OLS index, got n={n}, p={p}")
    if smoother not in SMOOTHERS:
        raise DataError(f"smoother must be one of {SMOOTHERS}")
    beta, intercept = _ols_intercept(x, y)
    u = x @ beta
    if not np.std(u) > 0:
        raise DataError("degenerate index: OLS direction gives a constant projection")
    h = plugin_bandwidth(u) if bandwidth == "plugin" else float(bandwidth)
    if not h > 0:
        raise DataError("bandwidth must be positive")
    grid = np.linspace(u.min(), u.max(), grid_size)
    spline = None
    if smoother == "spline":
        order = np.argsort(u, kind="stable")
        us, ys = u[order], y[order]
        # make_smoothing_spline needs strictly increasing abscissae
        keep = np.concatenate([[True], np.diff(us) > 0])
        if not keep.all():
            uniq, inv = np.unique(us, return_inverse=True)
            ys = np.bincount(inv, weights=ys) / np.bincount(inv)
            us = uniq
        try:
            spline = make_smoothing_spline(us, ys)
        except (ValueError, np.linalg.LinAlgError) as exc:
            raise NumericalError(f"smoothing spline failed: {exc}") from None
        values = spline(grid)
    else:
        values = local_linear(u, y, grid, h)
    return SingleIndexFit(
        beta_hat=beta,
        intercept=float(intercept),
        index=u,
        y=y,
        smoother=smoother,
        bandwidth=h,
        grid=grid,
        link_values=values,
        spline=spline,
    )


def stein_k(
    beta,
    g: Callable[[np.ndarray], np.ndarray],
    mean=None,
    cov=None,
    alpha: float = 0.0,
    n_draws: int = 1_000_000,
    seed: int = 0,
) -> tuple[float, float]:
    """Monte Carlo proportionality constant ``k = cov(g(v), v) / var(v)``.

    ``v = alpha + beta'X`` with ``X ~ N(mean, cov)`` (defaults: standard
    normal). Returns ``(k, standard_error)``.
    """
    beta = np.atleast_1d(np.asarray(beta, dtype=float))
    p = beta.shape[0]
    mu = np.zeros(p) if mean is None else np.asarray(mean, dtype=float)
    sigma = np.eye(p) if cov is None else np.asarray(cov, dtype=float)
    m = alpha + beta @ mu
    s2 = float(beta @ sigma @ beta)
    if s2 <= 0:
        raise DataError("index variance is zero")
    rng = np.random.default_rng(seed)
    v = m + np.sqrt(s2) * rng.standard_normal(n_draws)
    terms = np.asarray(g(v), dtype=float) * (v - m)
    return float(terms.mean() / s2), float(terms.std(ddof=1) / np.sqrt(n_draws) / s2)


ACTIVATIONS = {
    "relu": lambda z: np.maximum(z, 0.0),
    "identity": lambda z: z,
}


@dataclass(frozen=True)
class Layer:
    weights: np.ndarray  # out x in
    intercept: np.ndarray | None
    kept_inputs: np.ndarray  # columns of the previous Z used
    dead_units: np.ndarray


@dataclass(frozen=True)
class DeepRecursiveFit:
    """Per-layer OLS estimates, input side first (B_L, ..., B_2) then the linear top B_1.

    Each hidden estimate is identified only up to a left factor (a diagonal
    scale in the idealized argument); only row spaces and the composed
    prediction are meaningful.
    """

    layers: list[Layer]
    activation: str
    residual_mse: list[float]

    @property
    def layer_estimates(self) -> list[np.ndarray]:
        return [layer.weights for layer in self.layers]

    def hidden_features(self, x) -> list[np.ndarray]:
        act = ACTIVATIONS[self.activation]
        z = np.asarray(x, dtype=float)
        feats = []
        for layer in self.layers[:-1]:
            z = act(z[:, layer.kept_inputs] @ layer.weights.T)
            feats.append(z)
        return feats

    def predict(self, x) -> np.ndarray:
        z = np.asarray(x, dtype=float)
        feats = self.hidden_features(z)
        if feats:
            z = feats[-1]
        top = self.layers[-1]
        return z[:, top.kept_inputs] @ top.weights.T + top.intercept


def fit_deep_relu_recursive(x, y, hidden_dims=(), activation: str = "relu") -> DeepRecursiveFit:
    """Estimate ``E[Y|X] = B_1 max(B_2 ... max(B_L X, 0) ..., 0)`` layer by layer.

    Stage 1 regresses Y on X; its slope matrix is B_L-hat and
    ``Z = max(B_L-hat X, 0)``. Each later stage regresses Y on the previous
    Z, and the top layer is a linear OLS fit with intercept. Hidden widths
    must not exceed the output dimension q; a width D < q keeps the leading
    D directions of the stage's OLS slope (rank-D truncation).
    """
    if activation not in ACTIVATIONS:
        raise DataError(f"activation must be one of {sorted(ACTIVATIONS)}")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    n, q = y.shape
    act = ACTIVATIONS[activation]
    z = x
    layers, mse = [], []
    for D in hidden_dims:
        if D < 1:
            raise DataError("hidden widths must be >= 1")
        if D > q:
            raise DataError(f"hidden width {D} exceeds output dimension {q}; OLS cannot identify it")
        if z.shape[1] + 1 >= n:
            raise DataError(f"layer input width {z.shape[1]} too large for n={n}")
        alive = np.flatnonzero(np.any(z != 0, axis=0))
        coef, b0 = _ols_intercept(z[:, alive], y)
        mse.append(float(np.mean((y - z[:, alive] @ coef - b0) ** 2)))
        slope = coef.T  # q x in
        if D < q:
            dec = linalg.svd(slope.T)
            slope = (dec.right[:, :D] * dec.singular_values[:D]).T
        z_next = act(z[:, alive] @ slope.T)
        dead = np.flatnonzero(~np.any(z_next != 0, axis=0))
        layers.append(Layer(slope, None, alive, dead))
        z = z_next
    alive = np.flatnonzero(np.any(z != 0, axis=0))
    coef, b0 = _ols_intercept(z[:, alive], y)
    mse.append(float(np.mean((y - z[:, alive] @ coef - b0) ** 2)))
    layers.append(Layer(coef.T, b0, alive, np.array([], dtype=int)))
    return DeepRecursiveFit(layers, activation, mse)


@dataclass(frozen=True)
class ProportionalityReport:
    slopes: np.ndarray
    r_squared: np.ndarray
    correlations: np.ndarray
    principal_angles_deg: np.ndarray

    def to_dict(self) -> dict:
        return {k: getattr(self, k).tolist() for k in ("slopes", "r_squared", "correlations", "principal_angles_deg")}


def proportionality_report(b_hat, b_true) -> ProportionalityReport:
    """Row-wise through-origin fit of b_hat on b_true, plus row-space angles."""
    bh = np.atleast_2d(np.asarray(b_hat, dtype=float))
    bt = np.atleast_2d(np.asarray(b_true, dtype=float))
    if bh.shape != bt.shape:
        raise DataError(f"shape mismatch {bh.shape} vs {bt.shape}")
    if np.any(np.all(bt == 0, axis=1)) or np.any(np.all(bh == 0, axis=1)):
        raise DataError("zero rows have no direction")
    slopes = np.sum(bh * bt, axis=1) / np.sum(bt * bt, axis=1)
    resid = bh - slopes[:, None] * bt
    r2 = 1 - np.sum(resid**2, axis=1) / np.sum(bh**2, axis=1)
    corr = np.array([np.corrcoef(a, b)[0, 1] if a.size > 1 else 1.0 for a, b in zip(bh, bt)])
    angles = np.degrees(linalg.principal_angles(bh.T, bt.T))
    return ProportionalityReport(slopes, r2, corr, angles)
