"""Seeded synthetic data: single-index networks and the independent-predictor examples."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError

SCENARIOS = ("relu_index", "tanh_index", "log_abs", "two_output")

LOG_ABS_B = np.array([1.0, 2.0, 0.0, 0.0])
TWO_OUTPUT_B1 = np.array([0.0, 0.0, 2.0, 2.0])
TWO_OUTPUT_B2 = np.array([1.0, 2.0, 0.0, 0.0])
# The printed two-output noise matrix; its off-diagonal exceeds the diagonal.
TWO_OUTPUT_NOISE = np.array([[0.001, 0.005], [0.005, 0.001]])
LOG_ABS_NOISE = 0.005
INDEX_NOISE_SD = 0.1

LINKS = {
    "relu_index": lambda v: np.maximum(v, 0.0),
    "tanh_index": np.tanh,
}


def nearest_psd(c) -> tuple[np.ndarray, bool]:
    """Clip negative eigenvalues of a symmetric matrix at zero. Returns ``(matrix, changed)``."""
    c = np.asarray(c, dtype=float)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise DataError("covariance must be square")
    if not np.allclose(c, c.T):
        raise DataError("covariance must be symmetric")
    vals, vecs = np.linalg.eigh(0.5 * (c + c.T))
    if np.all(vals >= 0):
        return c.copy(), False
    clipped = np.clip(vals, 0.0, None)
    out = (vecs * clipped) @ vecs.T
    return 0.5 * (out + out.T), True


def _noise(rng, cov: np.ndarray, n: int) -> np.ndarray:
    vals, vecs = np.linalg.eigh(cov)
    root = vecs * np.sqrt(np.clip(vals, 0.0, None))
    return rng.standard_normal((n, cov.shape[0])) @ root.T


@dataclass(frozen=True)
class SimSpec:
    scenario: str
    n: int = 1000
    p: int | None = None
    seed: int = 0
    noise: object = None  # scalar variance or q x q covariance; None = scenario default

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise DataError(f"scenario must be one of {SCENARIOS}")
        if self.n < 1:
            raise DataError("n must be >= 1")
        if self.scenario in ("log_abs", "two_output") and self.p not in (None, 4):
            raise DataError(f"{self.scenario} is defined for p = 4")

    @property
    def dim(self) -> int:
        if self.p is not None:
            return self.p
        return 20 if self.scenario in LINKS else 4

    def to_dict(self) -> dict:
        noise = self.noise.tolist() if isinstance(self.noise, np.ndarray) else self.noise
        return {"scenario": self.scenario, "n": self.n, "p": self.dim, "seed": self.seed, "noise": noise}


@dataclass(frozen=True)
class SimTruth:
    coefficients: np.ndarray  # q x p
    noise_cov: np.ndarray
    projected: bool
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "coefficients": self.coefficients.tolist(),
            "noise_cov": self.noise_cov.tolist(),
            "noise_projected_to_psd": self.projected,
            **self.extra,
        }


def generate(spec: SimSpec) -> tuple[np.ndarray, np.ndarray, SimTruth]:
    """Draw ``(X, Y, truth)``. X is standard normal; draws happen in a fixed order
    (true coefficients, then X, then noise) from one seeded generator."""
    rng = np.random.default_rng(spec.seed)
    n, p = spec.n, spec.dim
    if spec.scenario in LINKS:
        beta = rng.standard_normal(p) / np.sqrt(p)
        beta /= np.linalg.norm(beta)  # unit-variance index
        sd = INDEX_NOISE_SD if spec.noise is None else float(np.sqrt(spec.noise))
        cov = np.array([[sd**2]])
        x = rng.standard_normal((n, p))
        y = LINKS[spec.scenario](x @ beta) + _noise(rng, cov, n)[:, 0]
        return x, y[:, None], SimTruth(beta[None, :], cov, False, {"link": spec.scenario.split("_")[0], "alpha": 0.0})
    if spec.scenario == "log_abs":
        var = LOG_ABS_NOISE if spec.noise is None else float(spec.noise)
        cov = np.array([[var]])
        x = rng.standard_normal((n, p))
        y = np.log(np.abs(1 + x @ LOG_ABS_B)) + _noise(rng, cov, n)[:, 0]
        return x, y[:, None], SimTruth(LOG_ABS_B[None, :].copy(), cov, False)
    raw = TWO_OUTPUT_NOISE if spec.noise is None else np.asarray(spec.noise, dtype=float)
    cov, projected = nearest_psd(raw)
    x = rng.standard_normal((n, p))
    y = np.column_stack([x @ TWO_OUTPUT_B1, np.log(np.abs(1 + x @ TWO_OUTPUT_B2))]) + _noise(rng, cov, n)
    truth = SimTruth(np.vstack([TWO_OUTPUT_B1, TWO_OUTPUT_B2]), cov, projected, {"noise_cov_as_given": raw.tolist()})
    return x, y, truth


def collinear_fixture(seed: int = 0, n: int = 60) -> tuple[np.ndarray, np.ndarray]:
    """Two near-duplicate predictors with opposite effects plus an independent one.

    ``y = x1 - x2 + 0.5 x3 + 0.3 e``. One-component PLS has a scale factor
    above 1 on the leading eigen-direction here.
    """
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(n)
    x = np.column_stack([z + 0.1 * rng.standard_normal(n), z + 0.1 * rng.standard_normal(n), rng.standard_normal(n)])
    y = x[:, 0] - x[:, 1] + 0.5 * x[:, 2] + 0.3 * rng.standard_normal(n)
    return x, y


def deep_relu_data(p: int = 6, width: int = 3, n: int = 5000, seed: int = 0, noise_sd: float = 0.1):
    """``Y = max(X B2', 0) B1' + e`` with ``B2`` width x p and ``B1`` width x width.

    Returns ``(X, Y, B2, B1)``.
    """
    rng = np.random.default_rng(seed)
    b2 = rng.standard_normal((width, p))
    b1 = rng.standard_normal((width, width))
    x = rng.standard_normal((n, p))
    y = np.maximum(x @ b2.T, 0.0) @ b1.T + noise_sd * rng.standard_normal((n, width))
    return x, y, b2, b1
