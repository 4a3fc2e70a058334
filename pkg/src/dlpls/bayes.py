"""Conjugate Bayesian regression of Y on Y-scores with an isotropic Gaussian prior.

For each output column: ``y = U c + e``, ``c ~ N(0, s2 I)``,
``e ~ N(0, s2_eps I)``. Closed-form posterior and predictive, plus a Gibbs
sampler that also draws s2_eps under an inverse-gamma prior.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, cholesky
from scipy.stats import norm

from . import linalg
from .errors import DataError, NumericalError

DEFAULT_PRIOR_VAR = 0.1
DEFAULT_IG = (0.01, 0.01)
QUANTILES = (0.05, 0.5, 0.95)


@dataclass(frozen=True)
class ConjugatePosterior:
    mean: np.ndarray  # L
    cov: np.ndarray  # L x L
    noise_var: float
    prior_var: float

    def to_dict(self) -> dict:
        return {
            "mean": self.mean.tolist(),
            "cov": self.cov.tolist(),
            "noise_var": self.noise_var,
            "prior_var": self.prior_var,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ConjugatePosterior":
        return cls(
            np.asarray(d["mean"], dtype=float),
            np.asarray(d["cov"], dtype=float),
            float(d["noise_var"]),
            float(d["prior_var"]),
        )


@dataclass(frozen=True)
class PredictiveDistribution:
    mean: float
    variance: float
    family: str = "gaussian"

    def quantiles(self, probs=QUANTILES) -> np.ndarray:
        return norm.ppf(np.asarray(probs), loc=self.mean, scale=np.sqrt(self.variance))


def _check(u, y):
    u = np.asarray(u, dtype=float)
    if u.ndim == 1:
        u = u[:, None]
    y = np.asarray(y, dtype=float).ravel()
    if u.shape[0] != y.shape[0]:
        raise DataError(f"row mismatch: U has {u.shape[0]}, y has {y.shape[0]}")
    if not (np.all(np.isfinite(u)) and np.all(np.isfinite(y))):
        raise DataError("non-finite inputs")
    return u, y


def _posterior_moments(utu, uty, prior_var, noise_var):
    L = utu.shape[0]
    prec = utu / noise_var + np.eye(L) / prior_var
    try:
        c = cholesky(prec, lower=True)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"posterior precision not positive definite: {exc}") from None
    cov = cho_solve((c, True), np.eye(L))
    cov = 0.5 * (cov + cov.T)
    mean = cho_solve((c, True), uty / noise_var)
    return mean, cov, c


def posterior(u, y, prior_var: float = DEFAULT_PRIOR_VAR, noise_var: float | None = None) -> ConjugatePosterior:
    """``S = (U'U / s2_eps + I / s2)^-1``, ``m = S U'y / s2_eps``.

    ``noise_var=None`` uses :func:`default_noise_var`.
    """
    u, y = _check(u, y)
    if not prior_var > 0:
        raise DataError("prior variance must be positive")
    if noise_var is None:
        noise_var = default_noise_var(u, y)
    if not noise_var > 0:
        raise DataError("noise variance must be positive")
    mean, cov, _ = _posterior_moments(u.T @ u, u.T @ y, prior_var, noise_var)
    return ConjugatePosterior(mean, cov, float(noise_var), float(prior_var))


def default_noise_var(u, y) -> float:
    """Residual variance of the least-squares fit of y on U (n - L denominator)."""
    u, y = _check(u, y)
    n, L = u.shape
    resid = y - u @ linalg.ols(u, y)
    dof = n - L if n > L else n
    v = float(resid @ resid / dof)
    if not v > 0:
        v = float(np.var(y)) or 1.0
    return v


def posterior_predictive(post: ConjugatePosterior, u_new) -> PredictiveDistribution:
    """Mean ``u*'m`` and variance ``u*'S u* + s2_eps``."""
    u_new = np.asarray(u_new, dtype=float).ravel()
    if u_new.shape[0] != post.mean.shape[0]:
        raise DataError(f"expected {post.mean.shape[0]} scores, got {u_new.shape[0]}")
    return PredictiveDistribution(float(u_new @ post.mean), float(u_new @ post.cov @ u_new + post.noise_var))


@dataclass(frozen=True)
class GibbsSamples:
    coefs: np.ndarray  # draws x L
    noise_var: np.ndarray  # draws
    seed: int

    def mc_se(self) -> np.ndarray:
        """Naive standard error of the coefficient means (independent-draw formula)."""
        return self.coefs.std(axis=0, ddof=1) / np.sqrt(self.coefs.shape[0])


def gibbs_last_layer(
    u,
    y,
    prior_var: float = DEFAULT_PRIOR_VAR,
    noise_prior: tuple[float, float] | None = DEFAULT_IG,
    iters: int = 20_000,
    burn_in: int = 1_000,
    seed: int = 0,
    noise_var: float | None = None,
) -> GibbsSamples:
    """Alternate ``c | s2_eps`` (Gaussian) and ``s2_eps | c`` (inverse gamma).

    ``noise_prior=None`` holds s2_eps fixed at ``noise_var`` (default: the
    residual variance), which makes every coefficient draw exact.
    """
    u, y = _check(u, y)
    if not 0 <= burn_in < iters:
        raise DataError("need iters > burn_in >= 0")
    if not prior_var > 0:
        raise DataError("prior variance must be positive")
    n, L = u.shape
    rng = np.random.default_rng(seed)
    utu, uty = u.T @ u, u.T @ y
    s2 = default_noise_var(u, y) if noise_var is None else float(noise_var)
    fixed = noise_prior is None
    if fixed:
        mean, _, c = _posterior_moments(utu, uty, prior_var, s2)
    coefs = np.empty((iters - burn_in, L))
    noise = np.empty(iters - burn_in)
    for it in range(iters):
        if not fixed:
            mean, _, c = _posterior_moments(utu, uty, prior_var, s2)
        # c is the Cholesky factor of the precision: solve c' x = z gives cov(x) = prec^-1
        z = rng.standard_normal(L)
        coef = mean + np.linalg.solve(c.T, z)
        if not fixed:
            a0, b0 = noise_prior
            resid = y - u @ coef
            s2 = 1.0 / rng.gamma(a0 + n / 2, 1.0 / (b0 + 0.5 * resid @ resid))
        if it >= burn_in:
            coefs[it - burn_in] = coef
            noise[it - burn_in] = s2
    return GibbsSamples(coefs, noise, seed)


@dataclass(frozen=True)
class LastLayer:
    """One conjugate posterior per output column, on standardized Y."""

    posteriors: list[ConjugatePosterior]
    y_means: np.ndarray
    y_scales: np.ndarray

    def predict(self, u_new) -> tuple[np.ndarray, np.ndarray]:
        """Raw-unit predictive means and variances, each rows x q."""
        u_new = np.atleast_2d(np.asarray(u_new, dtype=float))
        means = np.empty((u_new.shape[0], len(self.posteriors)))
        vars_ = np.empty_like(means)
        for j, post in enumerate(self.posteriors):
            for i, row in enumerate(u_new):
                pd = posterior_predictive(post, row)
                means[i, j], vars_[i, j] = pd.mean, pd.variance
        return means * self.y_scales + self.y_means, vars_ * self.y_scales**2

    def summary_rows(self, u_new) -> list[dict]:
        means, vars_ = self.predict(u_new)
        rows = []
        for i in range(means.shape[0]):
            for j in range(means.shape[1]):
                qs = norm.ppf(QUANTILES, loc=means[i, j], scale=np.sqrt(vars_[i, j]))
                rows.append(
                    {"row": i, "output": j, "mean": means[i, j], "variance": vars_[i, j],
                     "q05": qs[0], "q50": qs[1], "q95": qs[2]}
                )
        return rows

    def to_dict(self) -> dict:
        return {
            "posteriors": [p.to_dict() for p in self.posteriors],
            "y_means": self.y_means.tolist(),
            "y_scales": self.y_scales.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LastLayer":
        return cls(
            [ConjugatePosterior.from_dict(p) for p in d["posteriors"]],
            np.asarray(d["y_means"], dtype=float),
            np.asarray(d["y_scales"], dtype=float),
        )


def fit_last_layer(u_hat, y_std, y_means, y_scales, prior_var: float = DEFAULT_PRIOR_VAR, noise_var=None) -> LastLayer:
    """Per-column posteriors of standardized Y on fitted scores ``u_hat``."""
    y_std = np.asarray(y_std, dtype=float)
    if y_std.ndim == 1:
        y_std = y_std[:, None]
    posts = [posterior(u_hat, y_std[:, j], prior_var, noise_var) for j in range(y_std.shape[1])]
    return LastLayer(posts, np.asarray(y_means, float), np.asarray(y_scales, float))
