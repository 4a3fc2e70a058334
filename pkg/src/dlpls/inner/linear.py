"""Linear inner models: per-score slopes or a full L x L map."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import linalg
from ..errors import DataError


@dataclass(frozen=True)
class LinearInner:
    """``U = T B``. In per-score form B is diagonal with through-origin slopes."""

    coeffs: np.ndarray  # L x L
    kind: str = "linear"
    per_score: bool = True

    def predict(self, t) -> np.ndarray:
        t = np.atleast_2d(np.asarray(t, dtype=float))
        if t.shape[1] != self.coeffs.shape[0]:
            raise DataError(f"expected {self.coeffs.shape[0]} score columns, got {t.shape[1]}")
        return t @ self.coeffs

    def to_dict(self) -> dict:
        return {"kind": self.kind, "coeffs": self.coeffs.tolist(), "per_score": self.per_score}

    @classmethod
    def from_dict(cls, d: dict) -> "LinearInner":
        return cls(np.asarray(d["coeffs"], dtype=float), per_score=d.get("per_score", True))


def fit_linear(t, u, per_score: bool = True) -> LinearInner:
    t = np.atleast_2d(np.asarray(t, dtype=float))
    u = np.atleast_2d(np.asarray(u, dtype=float))
    if t.shape != u.shape:
        raise DataError(f"score shapes differ: {t.shape} vs {u.shape}")
    if per_score:
        tt = np.sum(t * t, axis=0)
        if np.any(tt == 0):
            raise DataError("zero score column")
        return LinearInner(np.diag(np.sum(t * u, axis=0) / tt), per_score=True)
    return LinearInner(linalg.ols(t, u), per_score=False)
