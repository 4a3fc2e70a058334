"""Dense linear-algebra primitives with deterministic sign conventions.

LAPACK (through numpy) does the factorizations; this module fixes signs,
ordering and the numerical-rank rule so that everything downstream is
reproducible.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import subspace_angles

from .errors import DataError, NumericalError

RANK_RTOL = 1e-12


@dataclass(frozen=True)
class SvdResult:
    """Thin SVD ``a = left @ diag(singular_values) @ right.T``."""

    left: np.ndarray
    singular_values: np.ndarray
    right: np.ndarray

    @property
    def rank(self) -> int:
        return numerical_rank(self.singular_values, self.left.shape[0], self.right.shape[0])

    def reconstruct(self) -> np.ndarray:
        return (self.left * self.singular_values) @ self.right.T


@dataclass(frozen=True)
class EigenSpectrum:
    """Eigenpairs of a symmetric matrix, eigenvalues in descending order."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def _as_2d(a, name="a") -> np.ndarray:
    arr = np.asarray(a, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise DataError(f"{name} must be a matrix, got shape {arr.shape}")
    return arr


def sign_convention(vectors: np.ndarray) -> np.ndarray:
    """Return +1/-1 per column so that each column's largest-|entry| is positive."""
    if vectors.size == 0:
        return np.ones(vectors.shape[1])
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return signs


def numerical_rank(singular_values, n: int, m: int) -> int:
    s = np.asarray(singular_values)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > max(n, m) * s[0] * RANK_RTOL))


def svd(a) -> SvdResult:
    """Thin SVD with the right singular vectors sign-normalized.

    Raises
    ------
    NumericalError
        If LAPACK fails to converge; the message carries the matrix norm and
        shape to help diagnose the input.
    """
    a = _as_2d(a)
    if not np.all(np.isfinite(a)):
        raise DataError("svd input contains non-finite entries")
    try:
        u, s, vt = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            f"SVD did not converge for {a.shape} matrix with Frobenius norm "
            f"{np.linalg.norm(a):.3e}"
        ) from exc
    v = vt.T
    signs = sign_convention(v)
    return SvdResult(left=u * signs, singular_values=s, right=v * signs)


def truncated_approx(s: SvdResult, n_components: int) -> np.ndarray:
    """Best rank-``n_components`` approximation from a precomputed SVD."""
    r = s.singular_values.shape[0]
    if not 1 <= n_components <= r:
        raise DataError(f"rank must be in 1..{r}, got {n_components}")
    k = n_components
    return (s.left[:, :k] * s.singular_values[:k]) @ s.right[:, :k].T


def pinv(a) -> tuple[np.ndarray, int]:
    """Moore-Penrose pseudo-inverse and numerical rank."""
    a = _as_2d(a)
    n, m = a.shape
    dec = svd(a)
    rank = numerical_rank(dec.singular_values, n, m)
    inv_s = np.zeros_like(dec.singular_values)
    inv_s[:rank] = 1.0 / dec.singular_values[:rank]
    return (dec.right * inv_s) @ dec.left.T, rank


def lstsq(x, y) -> tuple[np.ndarray, int]:
    """Minimum-norm least squares. Returns ``(coef, rank)``; coef is p x q."""
    x = _as_2d(x, "x")
    y_arr = np.asarray(y, dtype=float)
    vector = y_arr.ndim == 1
    y2 = y_arr[:, None] if vector else y_arr
    if x.shape[0] != y2.shape[0]:
        raise DataError(f"row mismatch: x has {x.shape[0]}, y has {y2.shape[0]}")
    xp, rank = pinv(x)
    coef = xp @ y2
    return (coef[:, 0] if vector else coef), rank


def ols(x, y) -> np.ndarray:
    """Ordinary least squares coefficients (no intercept)."""
    return lstsq(x, y)[0]


def ridge(x, y, lam: float, gamma=None) -> np.ndarray:
    """Solve ``(X'X + lam * G'G) b = X'y``.

    ``gamma`` is ``None`` (identity), a length-p vector holding the diagonal
    of G, or a p x p matrix.
    """
    if lam < 0:
        raise DataError("lambda must be nonnegative")
    x = _as_2d(x, "x")
    y_arr = np.asarray(y, dtype=float)
    p = x.shape[1]
    if gamma is None:
        gg = np.eye(p)
    else:
        g = np.asarray(gamma, dtype=float)
        gg = np.diag(g**2) if g.ndim == 1 else g.T @ g
    if lam == 0:
        coef, rank = lstsq(x, y_arr)
        if rank < p:
            warnings.warn(
                f"ridge with lambda=0 on rank-deficient design (rank {rank} < {p}); "
                "using pseudo-inverse",
                RuntimeWarning,
                stacklevel=2,
            )
        return coef
    a = x.T @ x + lam * gg
    try:
        return np.linalg.solve(a, x.T @ y_arr)
    except np.linalg.LinAlgError:
        warnings.warn("singular ridge system; using pseudo-inverse", RuntimeWarning, stacklevel=2)
        return pinv(a)[0] @ (x.T @ y_arr)


def sym_eigen(v) -> EigenSpectrum:
    """Eigen-decomposition of a symmetric matrix (symmetrized first)."""
    v = _as_2d(v, "v")
    if v.shape[0] != v.shape[1]:
        raise DataError(f"matrix must be square, got {v.shape}")
    sym = 0.5 * (v + v.T)
    vals, vecs = np.linalg.eigh(sym)
    order = np.argsort(vals)[::-1]
    vals, vecs = vals[order], vecs[:, order]
    return EigenSpectrum(eigenvalues=vals, eigenvectors=vecs * sign_convention(vecs))


def principal_angles(a, b) -> np.ndarray:
    """Principal angles (radians, ascending) between the column spaces of a and b."""
    return np.sort(subspace_angles(_as_2d(a), _as_2d(b)))
