"""One-dimensional Gaussian-process regressors, one per score pair (t_k, u_k)."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.linalg import cho_solve, cholesky

from ..errors import DataError, NumericalError

KERNELS = ("squared-exponential",)
BASE_JITTER = 1e-8
MAX_JITTER_TRIES = 7


@dataclass(frozen=True)
class GpConfig:
    kernel: str = "squared-exponential"
    lengthscale: float = 1.0
    signal_variance: float = 1.0
    noise_variance: float = 0.0
    mean: float = 0.0

    def __post_init__(self):
        if self.kernel not in KERNELS:
            raise DataError(f"kernel must be one of {KERNELS}")
        if not self.lengthscale > 0:
            raise DataError("lengthscale must be positive")
        if not self.signal_variance > 0:
            raise DataError("signal variance must be positive")
        if not self.noise_variance >= 0:
            raise DataError("noise variance must be non-negative")

    def to_dict(self) -> dict:
        return asdict(self)


def sq_exp(a, b, lengthscale: float, signal_variance: float) -> np.ndarray:
    d = np.subtract.outer(np.asarray(a, float), np.asarray(b, float))
    return signal_variance * np.exp(-0.5 * (d / lengthscale) ** 2)


def _factor(k: np.ndarray, noise: float):
    """Cholesky of ``K + (noise or jitter) I``, escalating the jitter tenfold on failure."""
    n = k.shape[0]
    jitter = noise if noise > 0 else BASE_JITTER
    for _ in range(MAX_JITTER_TRIES):
        try:
            return cholesky(k + jitter * np.eye(n), lower=True), jitter
        except np.linalg.LinAlgError:
            jitter *= 10.0
    raise NumericalError(f"kernel matrix not factorizable (jitter up to {jitter / 10:g})")


@dataclass(frozen=True)
class GpModel:
    """Posterior of a zero-or-constant-mean GP given ``(t, u)``."""

    t: np.ndarray
    u: np.ndarray
    config: GpConfig
    chol: np.ndarray
    alpha: np.ndarray
    jitter: float

    def kernel(self, a, b) -> np.ndarray:
        return sq_exp(a, b, self.config.lengthscale, self.config.signal_variance)

    def predict(self, t_new, return_var: bool = False):
        t_new = np.asarray(t_new, dtype=float).ravel()
        k_star = self.kernel(self.t, t_new)
        mean = self.config.mean + k_star.T @ self.alpha
        if not return_var:
            return mean
        v = cho_solve((self.chol, True), k_star)
        var = self.config.signal_variance - np.sum(k_star * v, axis=0)
        return mean, np.maximum(var, 0.0)

    def to_dict(self) -> dict:
        return {"config": self.config.to_dict(), "t": self.t.tolist(), "u": self.u.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "GpModel":
        return fit_gp(d["t"], d["u"], GpConfig(**d["config"]))


def fit_gp(t, u, cfg: GpConfig = GpConfig()) -> GpModel:
    t = np.asarray(t, dtype=float).ravel()
    u = np.asarray(u, dtype=float).ravel()
    if t.shape != u.shape:
        raise DataError("t and u must have equal length")
    if t.size == 0:
        raise DataError("no rows")
    if not (np.all(np.isfinite(t)) and np.all(np.isfinite(u))):
        raise DataError("non-finite training data")
    k = sq_exp(t, t, cfg.lengthscale, cfg.signal_variance)
    chol, jitter = _factor(k, cfg.noise_variance)
    alpha = cho_solve((chol, True), u - cfg.mean)
    return GpModel(t, u, cfg, chol, alpha, jitter)


def gp_predict(model: GpModel, t_new):
    """Predictive mean and latent variance at ``t_new``."""
    return model.predict(t_new, return_var=True)


def default_config(t, u) -> GpConfig:
    """Data-scaled hyperparameters: lengthscale sd(t), signal var(u), noise 10% of var(u)."""
    t = np.asarray(t, float)
    u = np.asarray(u, float)
    sd_t = float(np.std(t, ddof=1)) if t.size > 1 else 1.0
    var_u = float(np.var(u, ddof=1)) if u.size > 1 else 1.0
    return GpConfig(
        lengthscale=sd_t if sd_t > 0 else 1.0,
        signal_variance=var_u if var_u > 0 else 1.0,
        noise_variance=0.1 * var_u if var_u > 0 else 0.1,
    )


@dataclass(frozen=True)
class PerScoreGp:
    """Independent GPs ``u_k ~ g_k(t_k)``, k = 1..L."""

    models: list[GpModel]
    kind: str = "gp"
    per_score: bool = True

    def predict(self, t) -> np.ndarray:
        t = np.atleast_2d(np.asarray(t, dtype=float))
        if t.shape[1] != len(self.models):
            raise DataError(f"expected {len(self.models)} score columns, got {t.shape[1]}")
        return np.column_stack([m.predict(t[:, k]) for k, m in enumerate(self.models)])

    def predict_var(self, t) -> np.ndarray:
        t = np.atleast_2d(np.asarray(t, dtype=float))
        return np.column_stack([m.predict(t[:, k], return_var=True)[1] for k, m in enumerate(self.models)])

    def to_dict(self) -> dict:
        return {"kind": self.kind, "models": [m.to_dict() for m in self.models]}

    @classmethod
    def from_dict(cls, d: dict) -> "PerScoreGp":
        return cls([GpModel.from_dict(m) for m in d["models"]])


def fit_per_score_gp(t, u, configs=None) -> PerScoreGp:
    """``configs``: one GpConfig for all scores, a list of them, or None for data-scaled defaults."""
    t = np.atleast_2d(np.asarray(t, dtype=float))
    u = np.atleast_2d(np.asarray(u, dtype=float))
    if t.shape != u.shape:
        raise DataError(f"score shapes differ: {t.shape} vs {u.shape}")
    L = t.shape[1]
    if configs is None:
        configs = [default_config(t[:, k], u[:, k]) for k in range(L)]
    elif isinstance(configs, GpConfig):
        configs = [configs] * L
    if len(configs) != L:
        raise DataError(f"need {L} GP configs, got {len(configs)}")
    return PerScoreGp([fit_gp(t[:, k], u[:, k], c) for k, c in enumerate(configs)])
