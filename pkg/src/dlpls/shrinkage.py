"""Frank-Friedman view of RR, PCR and PLS as per-eigendirection scale factors.

Every linear estimator here has the form ``beta_M = sum_j f_j alpha_j v_j``
where ``(e_j^2, v_j)`` are the eigenpairs of ``V = X'X / (n-1)`` on the
standardized design and ``alpha_j = v_j' beta_OLS``. The factors f_j are
computed numerically as ``(v_j' beta_M) / alpha_j``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .dataset import StandardizedMatrix, standardize
from .errors import DataError
from .linalg import EigenSpectrum
from .pls import beta_pls, fit_pls

ALPHA_TOL = 1e-12
LAMBDA_BRACKET = (1e-10, 1e10)
BISECTION_MAX_ITER = 200
METHODS = ("RR", "PCR", "PLS")


def _xy(x, y):
    xs = x if isinstance(x, StandardizedMatrix) else standardize(x)
    y = np.asarray(y, dtype=float).ravel()
    if y.shape[0] != xs.values.shape[0]:
        raise DataError("row mismatch between x and y")
    return xs.values, y - y.mean()


def spectrum(x) -> EigenSpectrum:
    X = x.values if isinstance(x, StandardizedMatrix) else standardize(x).values
    return linalg.sym_eigen(X.T @ X / (X.shape[0] - 1))


def alpha_ols(x, y) -> np.ndarray:
    """OLS coefficients expressed in the eigenbasis of V."""
    X, yc = _xy(x, y)
    b = linalg.ols(X, yc)
    return spectrum(x).eigenvectors.T @ b


def method_beta(method: str, x, y, lam: float | None = None, n_components: int | None = None) -> np.ndarray:
    """Coefficient vector (standardized X, centered y) for RR, PCR or PLS."""
    X, yc = _xy(x, y)
    n, p = X.shape
    if method == "OLS":
        return linalg.ols(X, yc)
    if method == "RR":
        if lam is None:
            raise DataError("RR needs lambda")
        # V-scale ridge: (V + lam I) b = X'y/(n-1)
        return linalg.ridge(X, yc, lam * (n - 1))
    if method == "PCR":
        if n_components is None or not 0 <= n_components <= p:
            raise DataError(f"PCR needs 0 <= L <= {p}")
        spec = spectrum(x)
        alpha = spec.eigenvectors.T @ linalg.ols(X, yc)
        L = n_components
        return spec.eigenvectors[:, :L] @ alpha[:L]
    if method == "PLS":
        if n_components is None:
            raise DataError("PLS needs a component count")
        m = fit_pls(
            StandardizedMatrix(X, np.zeros(p), np.ones(p)),
            StandardizedMatrix(yc[:, None], np.zeros(1), np.ones(1)),
            n_components,
        )
        return beta_pls(m)[:, 0]
    raise DataError(f"unknown method {method!r}")


@dataclass(frozen=True)
class ShrinkageReport:
    spectrum: EigenSpectrum
    alpha_hat: np.ndarray
    factors: dict[str, np.ndarray]
    params: dict[str, float]
    indeterminate: np.ndarray
    normalization: dict = field(default_factory=dict)

    def rows(self) -> list[dict]:
        out = []
        for j in range(self.alpha_hat.shape[0]):
            row = {"j": j + 1, "eigenvalue": float(self.spectrum.eigenvalues[j]), "alpha": float(self.alpha_hat[j])}
            for m, f in self.factors.items():
                row[f"f_{m}"] = float(f[j])
            row["indeterminate"] = int(self.indeterminate[j])
            out.append(row)
        return out

    def to_csv(self) -> str:
        rows = self.rows()
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {"params": self.params, "normalization": self.normalization, "directions": self.rows()}


def factors_from_beta(beta, spec: EigenSpectrum, alpha) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(f, indeterminate)``; directions with |alpha| below tolerance get f=1."""
    proj = spec.eigenvectors.T @ np.asarray(beta, dtype=float)
    indeterminate = np.abs(alpha) < ALPHA_TOL * max(1.0, np.abs(alpha).max())
    safe = np.where(indeterminate, 1.0, alpha)
    f = np.where(indeterminate, 1.0, proj / safe)
    return f, indeterminate


def scale_factors(method: str, x, y, lam: float | None = None, n_components: int | None = None) -> np.ndarray:
    """Per-direction scale factors f_j for one method."""
    spec = spectrum(x)
    alpha = alpha_ols(x, y)
    beta = method_beta(method, x, y, lam=lam, n_components=n_components)
    return factors_from_beta(beta, spec, alpha)[0]


def rr_factors_closed_form(eigenvalues, lam: float) -> np.ndarray:
    e2 = np.asarray(eigenvalues, dtype=float)
    return e2 / (e2 + lam)


def pcr_factors_closed_form(eigenvalues, n_components: int) -> np.ndarray:
    e2 = np.asarray(eigenvalues, dtype=float)
    if n_components == 0:
        return np.zeros_like(e2)
    return (e2 >= e2[n_components - 1]).astype(float)


def ridge_norm(lam: float, spec: EigenSpectrum, alpha) -> float:
    return float(np.linalg.norm(rr_factors_closed_form(spec.eigenvalues, lam) * alpha))


def match_ridge_lambda(target_norm: float, spec: EigenSpectrum, alpha) -> tuple[float, str]:
    """Bisection on log(lambda) so that |beta_RR| = target_norm.

    Returns ``(lambda, status)``; status is ``"matched"``, ``"boundary_ols"``
    (target at or above |beta_OLS|) or ``"total_shrinkage"`` (target zero).
    """
    ols_norm = float(np.linalg.norm(alpha))
    if target_norm <= 0:
        return math.inf, "total_shrinkage"
    if target_norm >= ols_norm * (1 - 1e-12):
        return 0.0, "boundary_ols"
    lo, hi = np.log(LAMBDA_BRACKET[0]), np.log(LAMBDA_BRACKET[1])
    if ridge_norm(np.exp(hi), spec, alpha) > target_norm:
        return float(np.exp(hi)), "bracket_exceeded"
    if ridge_norm(np.exp(lo), spec, alpha) < target_norm:
        return float(np.exp(lo)), "bracket_exceeded"
    for _ in range(BISECTION_MAX_ITER):
        mid = 0.5 * (lo + hi)
        if ridge_norm(np.exp(mid), spec, alpha) > target_norm:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-14:
            break
    return float(np.exp(0.5 * (lo + hi))), "matched"


def match_pcr_components(target_norm: float, alpha) -> int:
    """PCR component count whose coefficient norm is nearest the target (ties: fewer)."""
    norms = np.sqrt(np.concatenate([[0.0], np.cumsum(np.asarray(alpha) ** 2)]))
    return int(np.argmin(np.abs(norms - target_norm)))


def normalize_overall_shrinkage(x, y, reference_beta) -> dict:
    """Choose RR lambda and PCR L so their coefficient lengths match a reference."""
    spec = spectrum(x)
    alpha = alpha_ols(x, y)
    target = float(np.linalg.norm(reference_beta))
    lam, status = match_ridge_lambda(target, spec, alpha)
    L = match_pcr_components(target, alpha)
    return {
        "target_norm": target,
        "ols_norm": float(np.linalg.norm(alpha)),
        "lambda": lam,
        "lambda_status": status,
        "ridge_norm": ridge_norm(lam, spec, alpha) if math.isfinite(lam) else 0.0,
        "pcr_components": L,
        "pcr_norm": float(np.linalg.norm(alpha[:L])),
    }


def shrinkage_report(x, y, n_components: int, lam: float | None = None, pcr_components: int | None = None) -> ShrinkageReport:
    """Scale factors for PLS with ``n_components`` and RR/PCR.

    Unless given, lambda and the PCR count are matched to the PLS
    coefficient length.
    """
    spec = spectrum(x)
    alpha = alpha_ols(x, y)
    b_pls = method_beta("PLS", x, y, n_components=n_components)
    norm = normalize_overall_shrinkage(x, y, b_pls)
    lam = norm["lambda"] if lam is None else lam
    L = norm["pcr_components"] if pcr_components is None else pcr_components
    betas = {"PLS": b_pls, "PCR": method_beta("PCR", x, y, n_components=L)}
    if math.isfinite(lam):
        betas["RR"] = method_beta("RR", x, y, lam=lam)
    else:
        betas["RR"] = np.zeros_like(b_pls)
    factors = {}
    indet = np.zeros(alpha.shape, dtype=bool)
    for m in METHODS:
        f, ind = factors_from_beta(betas[m], spec, alpha)
        factors[m] = f
        indet |= ind
    return ShrinkageReport(
        spectrum=spec,
        alpha_hat=alpha,
        factors=factors,
        params={"lambda": lam, "pcr_components": L, "pls_components": n_components},
        indeterminate=indet,
        normalization=norm,
    )


def pcr_fit_sequence(x, y, n_components: int) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Fitted values and coefficients of PCR with 0..n_components components.

    Fit 0 is the overall mean of y; each further model adds the simple
    regression of y on the next principal-component score.
    """
    X, yc = _xy(x, y)
    ybar = float(np.mean(np.asarray(y, dtype=float)))
    p = X.shape[1]
    if not 0 <= n_components <= p:
        raise DataError(f"n_components must be in 0..{p}")
    spec = spectrum(x)
    fits = [np.full(X.shape[0], ybar)]
    coefs = [np.zeros(p)]
    for l in range(n_components):
        v = spec.eigenvectors[:, l]
        z = X @ v
        zz = z @ z
        gamma = (z @ yc) / zz if zz > 0 else 0.0
        fits.append(fits[-1] + gamma * z)
        coefs.append(coefs[-1] + gamma * v)
    return fits, coefs


def dropout_ridge(x, y, p_keep: float) -> np.ndarray:
    """Minimizer of the mask-marginalized dropout objective.

    ``E_D |Y - (D*X) W|^2 = |Y - p X W|^2 + p(1-p) |Gamma W|^2`` with
    ``Gamma = diag(X'X)^(1/2)``; the minimizer is a ridge solve with penalty
    ``(1-p)/p * Gamma^2`` on the response rescaled by 1/p.
    """
    if not 0 < p_keep < 1:
        raise DataError("p_keep must lie strictly between 0 and 1")
    X = np.asarray(x, dtype=float)
    Y = np.asarray(y, dtype=float)
    gamma = np.sqrt(np.sum(X**2, axis=0))
    return linalg.ridge(X, Y / p_keep, (1 - p_keep) / p_keep, gamma)


def dropout_objective(x, y, w, p_keep: float) -> float:
    """Closed-form expected dropout loss at W."""
    X = np.asarray(x, dtype=float)
    Y = np.asarray(y, dtype=float)
    W = np.asarray(w, dtype=float)
    W2 = W if W.ndim == 2 else W[:, None]
    Y2 = Y if Y.ndim == 2 else Y[:, None]
    gamma2 = np.sum(X**2, axis=0)
    fit = np.sum((Y2 - p_keep * X @ W2) ** 2)
    penalty = p_keep * (1 - p_keep) * np.sum(gamma2[:, None] * W2**2)
    return float(fit + penalty)


def dropout_objective_mc(x, y, w, p_keep: float, n_masks: int = 100_000, seed: int = 0, chunk: int = 2000):
    """Monte Carlo mean and standard error of ``|Y - (D*X) W|^2`` over Bernoulli masks."""
    X = np.asarray(x, dtype=float)
    Y = np.asarray(y, dtype=float)
    W = np.asarray(w, dtype=float)
    W2 = W if W.ndim == 2 else W[:, None]
    Y2 = Y if Y.ndim == 2 else Y[:, None]
    rng = np.random.default_rng(seed)
    losses = np.empty(n_masks)
    done = 0
    while done < n_masks:
        m = min(chunk, n_masks - done)
        masks = rng.random((m,) + X.shape) < p_keep
        pred = np.einsum("knp,pq->knq", masks * X, W2)
        losses[done:done + m] = np.sum((Y2[None] - pred) ** 2, axis=(1, 2))
        done += m
    return float(losses.mean()), float(losses.std(ddof=1) / np.sqrt(n_masks))
