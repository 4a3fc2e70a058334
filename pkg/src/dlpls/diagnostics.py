"""Diagnostic artifacts as plain tables: scree, biplot, correlation circle,
scale-factor curves and link recovery. No plotting."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg, shrinkage
from .dataset import StandardizedMatrix, standardize
from .errors import DataError
from .pls import PlsModel, scree_values

BIPLOT_MODES = ("form", "covariance")


def scree_rows(x, y) -> list[dict]:
    """Singular values of the standardized cross-product, with cumulative share of squares."""
    s = scree_values(x, y)
    share = np.cumsum(s**2) / np.sum(s**2) if np.sum(s**2) > 0 else np.zeros_like(s)
    return [{"component": i + 1, "singular_value": float(v), "cumulative_share": float(c)} for i, (v, c) in enumerate(zip(s, share))]


@dataclass(frozen=True)
class BiplotData:
    sample_coords: np.ndarray  # n x 2
    variable_coords: np.ndarray  # p x 2
    mode: str
    variable_names: list[str]

    def reconstruction(self) -> np.ndarray:
        """Rank-2 approximation of the (standardized) data implied by the coordinates."""
        return self.sample_coords @ self.variable_coords.T

    def sample_rows(self) -> list[dict]:
        return [{"row": i, "dim1": float(a), "dim2": float(b)} for i, (a, b) in enumerate(self.sample_coords)]

    def variable_rows(self) -> list[dict]:
        return [
            {"variable": name, "dim1": float(a), "dim2": float(b)}
            for name, (a, b) in zip(self.variable_names, self.variable_coords)
        ]


def biplot(x, mode: str = "form", names=None) -> BiplotData:
    """Rank-2 SVD biplot of a standardized block.

    ``form``: samples ``U S``, variables ``V``. ``covariance``: samples
    ``sqrt(n-1) U``, variables ``V S / sqrt(n-1)`` (variable lengths then
    approximate standard deviations). Both reproduce the rank-2 truncation.
    """
    if mode not in BIPLOT_MODES:
        raise DataError(f"biplot mode must be one of {BIPLOT_MODES}")
    X = x.values if isinstance(x, StandardizedMatrix) else standardize(x).values
    n, p = X.shape
    dec = linalg.svd(X)
    if dec.rank < 2:
        raise DataError(f"biplot needs rank >= 2, data has rank {dec.rank}")
    u2, s2, v2 = dec.left[:, :2], dec.singular_values[:2], dec.right[:, :2]
    if mode == "form":
        samples, variables = u2 * s2, v2
    else:
        c = np.sqrt(n - 1)
        samples, variables = u2 * c, v2 * s2 / c
    names = list(names) if names is not None else [f"x{j + 1}" for j in range(p)]
    return BiplotData(samples, variables, mode, names)


@dataclass(frozen=True)
class CorrelationCircleData:
    names: list[str]
    groups: list[str]
    r1: np.ndarray
    r2: np.ndarray
    constant: np.ndarray

    def rows(self) -> list[dict]:
        return [
            {"variable": nm, "group": g, "r1": float(a), "r2": float(b), "constant": int(c)}
            for nm, g, a, b, c in zip(self.names, self.groups, self.r1, self.r2, self.constant)
        ]


def _corr_with(block: np.ndarray, score: np.ndarray):
    bc = block - block.mean(axis=0)
    sc = score - score.mean()
    bn = np.linalg.norm(bc, axis=0)
    sn = np.linalg.norm(sc)
    constant = ~(bn > 0)
    safe = np.where(constant, 1.0, bn)
    r = np.where(constant, 0.0, (bc.T @ sc) / (safe * sn))
    return np.clip(r, -1.0, 1.0), constant


def correlation_circle(x, y, pls: PlsModel, x_names=None, y_names=None, scores=None) -> CorrelationCircleData:
    """Pearson correlations of each X and Y variable with the first two X-scores.

    ``scores`` defaults to the training scores stored on ``pls``.
    """
    if pls.n_components < 2:
        raise DataError("correlation circle needs at least 2 components")
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.asarray(y, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    t = pls.x_scores if scores is None else np.asarray(scores, dtype=float)
    if t.shape[0] != x.shape[0] or y.shape[0] != x.shape[0]:
        raise DataError("rows of x, y and the scores differ")
    block = np.hstack([x, y])
    r1, c1 = _corr_with(block, t[:, 0])
    r2, _ = _corr_with(block, t[:, 1])
    x_names = list(x_names) if x_names is not None else [f"x{j + 1}" for j in range(x.shape[1])]
    y_names = list(y_names) if y_names is not None else [f"y{j + 1}" for j in range(y.shape[1])]
    groups = ["X"] * x.shape[1] + ["Y"] * y.shape[1]
    return CorrelationCircleData(x_names + y_names, groups, r1, r2, c1)


def scale_factor_curves(x, y, components=None) -> list[dict]:
    """Long table of per-direction scale factors.

    For every output column and every PLS component count in
    ``components`` (default 1..p), PCR and RR are normalized to the PLS
    coefficient length. Columns: output, setting, method, j, f, param.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    p = x.shape[1]
    components = list(components) if components is not None else list(range(1, p + 1))
    rows = []
    for col in range(y.shape[1]):
        for L in components:
            rep = shrinkage.shrinkage_report(x, y[:, col], L)
            params = {"PLS": float(L), "PCR": float(rep.params["pcr_components"]), "RR": float(rep.params["lambda"])}
            for method in ("PLS", "PCR", "RR"):
                for j, f in enumerate(rep.factors[method]):
                    rows.append(
                        {"output": col, "setting": L, "method": method, "j": j + 1, "f": float(f), "param": params[method]}
                    )
    return rows


def link_recovery_rows(fit) -> tuple[list[dict], list[dict]]:
    """Curve and scatter tables from a single-index fit."""
    return fit.recovery_rows()
