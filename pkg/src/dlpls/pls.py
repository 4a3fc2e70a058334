"""Two-block partial least squares by SVD deflation, Helland's estimators,
score projection and cross-validated component selection."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np

from . import linalg
from .dataset import StandardizedMatrix, standardize
from .errors import DataError

log = logging.getLogger(__name__)

ZERO_COVARIANCE_RTOL = 1e-12


@dataclass(frozen=True)
class PlsModel:
    """A fitted PLS decomposition.

    Shapes use row-per-component conventions: ``x_weights`` W, ``x_loadings``
    P and ``y_loadings`` Q have one row per component. Scores are columns.

    Attributes
    ----------
    x_weights : (L, p)
        Unit directions applied to the deflated X block (orthonormal rows).
    x_loadings : (L, p)
        Deflation loadings ``p_l = X_res' t_l / |t_l|^2``.
    y_loadings : (L, q)
        Unit Y directions; ``u_l = Y_res q_l``.
    x_scores, y_scores : (n, L)
    inner_coeffs : (L,)
        Per-component slope of ``u_l`` on ``t_l``.
    y_targets : (n, L)
        Y-scores reconciled with the loadings: ``T diag(b) + E Q^+`` where E
        is the PLS residual. Joint inner models learn ``T -> y_targets``.
    """

    x_weights: np.ndarray
    x_loadings: np.ndarray
    y_loadings: np.ndarray
    x_scores: np.ndarray
    y_scores: np.ndarray
    inner_coeffs: np.ndarray
    y_targets: np.ndarray
    x_standardization: StandardizedMatrix
    y_standardization: StandardizedMatrix
    inner_mode: str = "scalar"
    inner_matrix: np.ndarray | None = None

    @property
    def n_components(self) -> int:
        return self.x_weights.shape[0]

    @property
    def rotations(self) -> np.ndarray:
        """p x L matrix R with ``T = X_std @ R`` exactly on training rows."""
        return self.x_weights.T @ np.linalg.inv(self.x_loadings @ self.x_weights.T)

    @property
    def inner(self) -> np.ndarray:
        """L x L linear map from X-scores to Y-scores."""
        if self.inner_mode == "matrix" and self.inner_matrix is not None:
            return self.inner_matrix
        return np.diag(self.inner_coeffs)

    def truncate(self, n_components: int) -> "PlsModel":
        """The nested model using only the first ``n_components`` components."""
        k = n_components
        if not 1 <= k <= self.n_components:
            raise DataError(f"cannot truncate {self.n_components}-component model to {k}")
        t, b, q = self.x_scores[:, :k], self.inner_coeffs[:k], self.y_loadings[:k]
        y_std = self.y_standardization.values
        targets = _reconciled_targets(y_std, t, b, q) if y_std.size else self.y_targets[:, :k]
        return PlsModel(
            x_weights=self.x_weights[:k],
            x_loadings=self.x_loadings[:k],
            y_loadings=q,
            x_scores=t,
            y_scores=self.y_scores[:, :k],
            inner_coeffs=b,
            y_targets=targets,
            x_standardization=self.x_standardization,
            y_standardization=self.y_standardization,
            inner_mode=self.inner_mode,
            inner_matrix=None if self.inner_matrix is None else linalg.ols(t, targets),
        )

    def to_dict(self, include_training: bool = True) -> dict:
        d = {
            "n_components": self.n_components,
            "inner_mode": self.inner_mode,
            "x_weights": self.x_weights.tolist(),
            "x_loadings": self.x_loadings.tolist(),
            "y_loadings": self.y_loadings.tolist(),
            "inner_coeffs": self.inner_coeffs.tolist(),
            "inner_matrix": None if self.inner_matrix is None else self.inner_matrix.tolist(),
            "x_standardization": self.x_standardization.params(),
            "y_standardization": self.y_standardization.params(),
        }
        if include_training:
            d["x_scores"] = self.x_scores.tolist()
            d["y_scores"] = self.y_scores.tolist()
            d["y_targets"] = self.y_targets.tolist()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PlsModel":
        L = d["n_components"]

        def arr(key, shape=(0, L)):
            return np.asarray(d[key], dtype=float).reshape(-1, shape[1]) if key in d else np.empty(shape)

        return cls(
            x_weights=np.asarray(d["x_weights"], dtype=float),
            x_loadings=np.asarray(d["x_loadings"], dtype=float),
            y_loadings=np.asarray(d["y_loadings"], dtype=float),
            x_scores=arr("x_scores"),
            y_scores=arr("y_scores"),
            inner_coeffs=np.asarray(d["inner_coeffs"], dtype=float),
            y_targets=arr("y_targets"),
            x_standardization=StandardizedMatrix.from_params(d["x_standardization"]),
            y_standardization=StandardizedMatrix.from_params(d["y_standardization"]),
            inner_mode=d.get("inner_mode", "scalar"),
            inner_matrix=None if d.get("inner_matrix") is None else np.asarray(d["inner_matrix"], float),
        )


def _reconciled_targets(y_std, t, b, q) -> np.ndarray:
    fitted_u = t * b
    resid = y_std - fitted_u @ q
    return fitted_u + resid @ np.linalg.pinv(q)


def _as_std(a) -> StandardizedMatrix:
    if isinstance(a, StandardizedMatrix):
        return a
    return standardize(a)


def fit_pls(x, y, n_components: int, inner_mode: str = "scalar") -> PlsModel:
    """Fit PLS with ``n_components`` components.

    ``x`` and ``y`` are StandardizedMatrix blocks; raw arrays are
    standardized on the way in. Each component takes the leading singular
    pair (w, q) of ``X_res' Y_res``, sets ``t = X_res w``, ``u = Y_res q``,
    regresses u on t for the inner slope, and deflates both blocks.
    """
    if inner_mode not in ("scalar", "matrix"):
        raise DataError(f"inner_mode must be 'scalar' or 'matrix', got {inner_mode!r}")
    xs, ys = _as_std(x), _as_std(y)
    X, Y = xs.values, ys.values
    if X.shape[0] != Y.shape[0]:
        raise DataError(f"row mismatch: X has {X.shape[0]}, Y has {Y.shape[0]}")
    n, p = X.shape
    q = Y.shape[1]
    rank = linalg.svd(X).rank if n and p else 0
    if not 1 <= n_components <= rank:
        raise DataError(f"number of components {n_components} must be in 1..rank(X)={rank}")

    xr, yr = X.copy(), Y.copy()
    # scale of |X'Y| for fully aligned blocks; round-off in X'Y sits far below it
    reference = np.linalg.norm(X) * np.linalg.norm(Y)
    W, P, Q, T, U, B = [], [], [], [], [], []
    for comp in range(n_components):
        cross = xr.T @ yr
        dec = linalg.svd(cross)
        if reference == 0 or dec.singular_values[0] <= ZERO_COVARIANCE_RTOL * reference:
            warnings.warn(
                f"X/Y cross-covariance vanished after {comp} component(s); "
                f"returning {comp} of {n_components}",
                RuntimeWarning,
                stacklevel=2,
            )
            break
        w = dec.left[:, 0]
        c = dec.right[:, 0]
        t = xr @ w
        u = yr @ c
        tt = t @ t
        beta = (t @ u) / tt
        p_l = xr.T @ t / tt
        xr = xr - np.outer(t, p_l)
        yr = yr - beta * np.outer(t, c)
        W.append(w), P.append(p_l), Q.append(c), T.append(t), U.append(u), B.append(beta)
    if not W:
        raise DataError("X and Y are uncorrelated: no PLS component could be extracted")

    T_arr = np.column_stack(T)
    B_arr = np.array(B)
    Q_arr = np.array(Q).reshape(len(Q), q)
    targets = _reconciled_targets(Y, T_arr, B_arr, Q_arr)
    return PlsModel(
        x_weights=np.array(W),
        x_loadings=np.array(P),
        y_loadings=Q_arr,
        x_scores=T_arr,
        y_scores=np.column_stack(U),
        inner_coeffs=B_arr,
        y_targets=targets,
        x_standardization=xs,
        y_standardization=ys,
        inner_mode=inner_mode,
        inner_matrix=linalg.ols(T_arr, targets) if inner_mode == "matrix" else None,
    )


def beta_pls(m: PlsModel, scale: str = "standardized"):
    """PLS regression coefficients.

    ``scale="standardized"`` returns the p x q matrix acting on standardized
    blocks. ``scale="raw"`` returns ``(coef, intercept)`` acting on raw units.
    """
    b_std = m.rotations @ m.inner @ m.y_loadings
    if scale == "standardized":
        return b_std
    if scale != "raw":
        raise DataError(f"scale must be 'standardized' or 'raw', got {scale!r}")
    xs, ys = m.x_standardization, m.y_standardization
    coef = b_std / xs.scales[:, None] * ys.scales[None, :]
    intercept = ys.means - xs.means @ coef
    return coef, intercept


def predict_linear(m: PlsModel, x_new) -> np.ndarray:
    """Raw-unit predictions of the linear PLS model."""
    coef, intercept = beta_pls(m, scale="raw")
    return np.asarray(x_new, dtype=float) @ coef + intercept


def scores(m: PlsModel, x_new) -> np.ndarray:
    """X-scores of new raw rows using the stored training standardization."""
    x_new = np.asarray(x_new, dtype=float)
    if x_new.ndim == 1:
        x_new = x_new[None, :]
    p = m.x_weights.shape[1]
    if x_new.shape[1] != p:
        raise DataError(f"expected {p} columns, got {x_new.shape[1]}")
    return m.x_standardization.apply(x_new) @ m.rotations


def _centered(x, y):
    xs = x.values if isinstance(x, StandardizedMatrix) else np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if xs.shape[0] != y.shape[0]:
        raise DataError("row mismatch between x and y")
    return xs - xs.mean(axis=0), y - y.mean(), y.mean()


def _krylov_basis(sxx, sxy, K):
    """Orthonormal basis of span(s, S s, ..., S^(K-1) s), Arnoldi with reorthogonalization."""
    p = sxx.shape[0]
    if not 1 <= K <= p:
        raise DataError(f"K must be in 1..{p}, got {K}")
    norm0 = np.linalg.norm(sxy)
    if norm0 == 0:
        raise DataError("S_xy is zero: y is uncorrelated with every column of x")
    basis = [sxy / norm0]
    scale = np.linalg.norm(sxx, 2)
    for _ in range(1, K):
        v = sxx @ basis[-1]
        for _pass in range(2):
            for b in basis:
                v = v - (b @ v) * b
        nv = np.linalg.norm(v)
        if nv <= 1e-10 * max(scale, 1.0):
            warnings.warn(
                f"Krylov space degenerate: effective K={len(basis)} < requested {K}",
                RuntimeWarning,
                stacklevel=3,
            )
            break
        basis.append(v / nv)
    return np.column_stack(basis)


def helland_beta(x, y, K: int) -> np.ndarray:
    """Closed-form PLS coefficients ``R (R' Sxx R)^-1 R' Sxy`` for a single response.

    R spans the Krylov space of (Sxx, Sxy); an orthonormal basis of that
    span gives the same estimator without the conditioning blow-up of raw
    matrix powers. Coefficients act on the (centered) columns of ``x`` and
    are in the units of ``y``.
    """
    xc, yc, _ = _centered(x, y)
    n = xc.shape[0]
    sxx = xc.T @ xc / (n - 1)
    sxy = xc.T @ yc / (n - 1)
    R = _krylov_basis(sxx, sxy, K)
    inner, _ = linalg.pinv(R.T @ sxx @ R)
    return R @ inner @ (R.T @ sxy)


def helland_iterative(x, y, K: int) -> list[np.ndarray]:
    """Fitted values for 1..K components via OLS on the Krylov features ``s_k' x``.

    ``s_k = V^(k-1) s`` with ``V = ave(x x')`` and ``s = ave(y x)``. Each s_k
    is rescaled to unit length, which leaves the OLS fit unchanged.
    """
    xc, yc, ybar = _centered(x, y)
    n, p = xc.shape
    if not 1 <= K <= p:
        raise DataError(f"K must be in 1..{p}, got {K}")
    v = xc.T @ xc / n
    s = xc.T @ yc / n
    if not np.any(s):
        raise DataError("ave(y x) is zero")
    directions = []
    fits = []
    sk = s / np.linalg.norm(s)
    for _ in range(K):
        directions.append(sk)
        z = xc @ np.column_stack(directions)
        coef = linalg.ols(z, yc)
        fits.append(ybar + z @ coef)
        sk = v @ sk
        sk = sk / np.linalg.norm(sk)
    return fits


@dataclass(frozen=True)
class CvCurve:
    candidates: np.ndarray
    mse: np.ndarray
    chosen: int
    seed: int
    folds: int

    def to_dict(self) -> dict:
        return {
            "candidates": self.candidates.tolist(),
            "mse": self.mse.tolist(),
            "chosen": self.chosen,
            "seed": self.seed,
            "folds": self.folds,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CvCurve":
        return cls(
            np.asarray(d["candidates"], dtype=int),
            np.asarray(d["mse"], dtype=float),
            int(d["chosen"]),
            int(d["seed"]),
            int(d["folds"]),
        )


def fold_assignment(n: int, folds: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    labels = np.arange(n) % folds
    return labels[rng.permutation(n)]


def select_components_cv(x, y, folds: int = 5, max_components: int | None = None, seed: int = 0) -> CvCurve:
    """K-fold CV over L = 1..max_components; held-out MSE on raw y.

    Each fold re-estimates standardization on its training rows only. The
    chosen L is the first minimizer (ties go to the smaller L).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    n, p = x.shape
    if folds < 2:
        raise DataError("need at least 2 folds")
    if n < folds:
        raise DataError(f"{n} rows cannot be split into {folds} folds")
    L_max = max_components or min(p, n - 1)
    labels = fold_assignment(n, folds, seed)
    smallest_train = n - np.bincount(labels).max()
    if L_max < 1 or L_max > min(p, smallest_train - 1):
        raise DataError(f"fold too small for {L_max} components (smallest training fold {smallest_train})")
    sse = np.zeros(L_max)
    for f in range(folds):
        test = labels == f
        xs, ys = standardize(x[~test]), standardize(y[~test])
        L_fit = min(L_max, linalg.svd(xs.values).rank)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            m = fit_pls(xs, ys, L_fit)
        t_test = scores(m, x[test])
        contrib = (t_test * m.inner_coeffs)[:, :, None] * m.y_loadings[None, :, :]
        pred_std = np.cumsum(contrib, axis=1)
        for L in range(1, L_max + 1):
            k = min(L, m.n_components) - 1
            pred = ys.invert(pred_std[:, k, :])
            sse[L - 1] += np.sum((y[test] - pred) ** 2)
    mse = sse / (n * y.shape[1])
    chosen = int(np.argmin(mse)) + 1
    log.info("CV curve %s -> L=%d", np.round(mse, 6).tolist(), chosen)
    return CvCurve(np.arange(1, L_max + 1), mse, chosen, seed, folds)


def scree_values(x, y) -> np.ndarray:
    """Singular values of ``X_std' Y_std`` in descending order."""
    X = _as_std(x).values
    Y = _as_std(y).values
    return linalg.svd(X.T @ Y).singular_values
