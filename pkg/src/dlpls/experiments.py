"""End-to-end reproductions: single-index recovery, the independent-predictor
simulation and the wine comparison. Each returns tables plus tolerance checks."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import linalg, shrinkage
from .brillinger import fit_single_index, proportionality_report, stein_k
from .dataset import (
    WINE_OUTPUT,
    ExpansionSpec,
    apply_transforms,
    expand_features,
    load_csv,
    parse_transform_spec,
    standardize,
)
from .diagnostics import correlation_circle, scree_rows
from .errors import DataError, NumericalError
from .inner import MlpConfig, fit_mlp
from .pipeline import fit_dlpls
from .pls import beta_pls, fit_pls, predict_linear
from .simulation import LINKS, TWO_OUTPUT_B1, TWO_OUTPUT_B2, SimSpec, generate

log = logging.getLogger(__name__)

EXPERIMENTS = ("relu-tanh", "independent-sim", "wine")

# Published reference values: (adj R^2, OOS accuracy) by (method, variables).
WINE_TABLE = {
    ("OLS", 11): (0.347, 0.59),
    ("PCR", 11): (0.324, 0.58),
    ("PLS", 11): (0.347, 0.595),
    ("OLS", 77): (0.403, 0.575),
    ("PCR", 77): (0.372, 0.595),
    ("PLS", 77): (0.389, 0.6),
}
WINE_COMPONENTS = {("PCR", 11): 5, ("PCR", 77): 15, ("PLS", 11): 5, ("PLS", 77): 10}
WINE_R2_TOL = {("OLS", 11): 0.01, ("OLS", 77): 0.01, ("PLS", 77): 0.02}
WINE_ACC_TOL = 0.05
NET_SUBSTITUTION_TOL = 0.05


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    target: str
    passed: bool

    def to_dict(self) -> dict:
        return {"name": self.name, "value": self.value, "target": self.target, "passed": self.passed}


@dataclass
class ExperimentReport:
    name: str
    tables: dict[str, list[dict]] = field(default_factory=dict)
    checks: list[Check] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def summary(self) -> dict:
        return {"experiment": self.name, "passed": self.passed, "checks": [c.to_dict() for c in self.checks], "meta": self.meta}


def _within(name, value, target, tol) -> Check:
    return Check(name, float(value), f"{target} +/- {tol}", bool(abs(value - target) <= tol))


def relu_tanh(seed: int = 0, n_seeds: int = 20, n_small: int = 50, n_large: int = 500, stein_draws: int = 1_000_000) -> ExperimentReport:
    """OLS direction recovery at small n and link recovery at larger n."""
    rep = ExperimentReport("relu-tanh", meta={"seed": seed, "n_seeds": n_seeds, "n_small": n_small, "n_large": n_large})
    prop_rows, err_rows, curve_rows, scatter_rows = [], [], [], []
    for scenario, g in LINKS.items():
        # true beta has unit norm, so the index is standard normal
        k, k_se = stein_k([1.0], g, n_draws=stein_draws, seed=seed)
        rep.meta[f"k_{scenario}"] = {"k": k, "se": k_se}
        corrs, errs = [], []
        for s in range(seed, seed + n_seeds):
            x, y, truth = generate(SimSpec(scenario, n=n_small, seed=s))
            fit = fit_single_index(x, y[:, 0])
            pr = proportionality_report(fit.beta_hat, truth.coefficients[0])
            corrs.append(pr.correlations[0])
            prop_rows.append(
                {"scenario": scenario, "seed": s, "slope": float(pr.slopes[0]), "r_squared": float(pr.r_squared[0]), "corr": float(pr.correlations[0])}
            )
            x, y, truth = generate(SimSpec(scenario, n=n_large, seed=s))
            fit = fit_single_index(x, y[:, 0])
            grid = fit.central_grid()
            g_hat = fit.link(grid)
            g_true = g(grid / k)
            err = float(np.max(np.abs(g_hat - g_true)))
            errs.append(err)
            err_rows.append({"scenario": scenario, "seed": s, "sup_error": err})
            if s == seed:
                curve_rows += [
                    {"scenario": scenario, "u": float(a), "g_hat": float(b), "g_true": float(c)} for a, b, c in zip(grid, g_hat, g_true)
                ]
                scatter_rows += [{"scenario": scenario, "index": float(a), "y": float(b)} for a, b in zip(fit.index, fit.y)]
        rep.checks.append(Check(f"{scenario} median corr(beta_hat, beta)", float(np.median(corrs)), ">= 0.9", bool(np.median(corrs) >= 0.9)))
        rep.checks.append(Check(f"{scenario} median sup link error", float(np.median(errs)), "<= 0.15", bool(np.median(errs) <= 0.15)))
    rep.tables = {"proportionality": prop_rows, "link_errors": err_rows, "link_curve": curve_rows, "link_scatter": scatter_rows}
    return rep


def independent_sim(seed: int = 0, n: int = 1000, n_components: int = 2, net_config: MlpConfig | None = None) -> ExperimentReport:
    """Two-output coefficient table and the single-output nonlinear score fit."""
    rep = ExperimentReport("independent-sim", meta={"seed": seed, "n": n, "n_components": n_components})
    x, y, truth = generate(SimSpec("two_output", n=n, seed=seed))
    rep.meta["noise_cov_used"] = truth.noise_cov.tolist()
    rep.meta["noise_projected_to_psd"] = truth.projected
    coef, _ = beta_pls(fit_pls(x, y, n_components), scale="raw")
    rep.tables["coefficients"] = [
        {"j": j + 1, "beta1": float(coef[j, 0]), "beta2": float(coef[j, 1]), "true1": float(TWO_OUTPUT_B1[j]), "true2": float(TWO_OUTPUT_B2[j])}
        for j in range(coef.shape[0])
    ]
    dev = float(np.max(np.abs(coef[:, 0] - TWO_OUTPUT_B1)))
    pr = proportionality_report(coef[:, 1], TWO_OUTPUT_B2)
    rep.meta["beta2_slope"] = float(pr.slopes[0])
    rep.checks.append(Check("max |beta1 - (0,0,2,2)|", dev, "<= 0.1", dev <= 0.1))
    rep.checks.append(Check("beta2 ~ (1,2,0,0) through-origin R^2", float(pr.r_squared[0]), ">= 0.95", bool(pr.r_squared[0] >= 0.95)))

    # single-output log|1 + Bx|: network on the first score vs linear inner model
    x1, y1, _ = generate(SimSpec("log_abs", n=n, seed=seed))
    x2, y2, _ = generate(SimSpec("log_abs", n=n, seed=seed + 1))
    cfg = net_config or MlpConfig(hidden=(16,), activation="relu", learning_rate=0.01, epochs=200, seed=seed)
    lin = fit_dlpls(x1, y1, 1, "linear")
    net = fit_dlpls(x1, y1, 1, "mlp", inner_config=cfg)
    mse_lin = float(np.mean((lin.predict(x2) - y2) ** 2))
    mse_net = float(np.mean((net.predict(x2) - y2) ** 2))
    rep.checks.append(Check("test MSE network < linear (log|1+Bx|)", mse_net, f"< {mse_lin:.6g}", mse_net < mse_lin))
    t1 = net.pls.x_scores[:, 0]
    order = np.argsort(t1)
    fitted = net.predict(x1)[:, 0]
    rep.tables["score_fit"] = [{"t1": float(t1[i]), "y": float(y1[i, 0]), "fitted": float(fitted[i])} for i in order]
    return rep


def stratified_split(labels, test_fraction: float = 0.2, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Per-class shuffled split; each class contributes round(fraction * size) test rows."""
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    test = []
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        idx = idx[rng.permutation(idx.size)]
        test.append(idx[: int(round(test_fraction * idx.size))])
    test = np.sort(np.concatenate(test))
    mask = np.zeros(labels.size, dtype=bool)
    mask[test] = True
    return np.flatnonzero(~mask), test


def adjusted_r2(y, fitted, k: int) -> float:
    y = np.asarray(y, float).ravel()
    fitted = np.asarray(fitted, float).ravel()
    n = y.size
    r2 = 1 - np.sum((y - fitted) ** 2) / np.sum((y - y.mean()) ** 2)
    return float(1 - (1 - r2) * (n - 1) / (n - k - 1))


def _linear_fit(method: str, x_train, y_train, n_components: int | None):
    """Returns a predictor function for OLS, PCR or PLS with intercept."""
    if method == "PLS":
        m = fit_pls(x_train, y_train, n_components)
        return lambda z: predict_linear(m, z)[:, 0]
    xs = standardize(x_train)
    ym = float(np.mean(y_train))
    if method == "OLS":
        b = linalg.ols(xs.values, y_train - ym)
    else:
        b = shrinkage.method_beta("PCR", xs, y_train, n_components=n_components)
    return lambda z: xs.apply(z) @ b + ym


def rounding_accuracy(y_true, y_pred) -> float:
    return float(np.mean(np.rint(y_pred) == np.asarray(y_true)))


def _net_and_substitution(x_train, y_train, x_test, y_test, seed: int):
    """77-16-32-16-K network on one-hot classes, then Brillinger regressions
    of each class indicator on the last hidden layer."""
    classes = np.unique(y_train)
    onehot = (y_train[:, None] == classes[None, :]).astype(float)
    xs = standardize(x_train)
    cfg = MlpConfig(hidden=(16, 32, 16), activation="relu", learning_rate=0.01, epochs=100, batch_size=32, seed=seed)
    net = fit_mlp(xs.values, onehot, cfg)
    z_test = xs.apply(x_test)
    acc_net = float(np.mean(classes[np.argmax(net.predict(z_test), axis=1)] == y_test))
    feat_train = net.hidden_features(xs.values)
    feat_test = net.hidden_features(z_test)
    scores = np.full((x_test.shape[0], classes.size), -np.inf)
    fallbacks = 0
    for i in range(classes.size):
        try:
            fit = fit_single_index(feat_train, onehot[:, i], smoother="spline")
        except NumericalError:
            fallbacks += 1
            fit = fit_single_index(feat_train, onehot[:, i])
        except DataError:
            continue
        scores[:, i] = fit.predict(feat_test)
    acc_sub = float(np.mean(classes[np.argmax(scores, axis=1)] == y_test))
    return acc_net, acc_sub, fallbacks


def wine(path, seed: int = 0, transforms: str | None = "wine", with_net: bool = False, delimiter: str = ";") -> ExperimentReport:
    """Adjusted R^2 and rounded-prediction accuracy of OLS/PCR/PLS on 11 and 77 inputs."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(
            f"wine data not found at {path}; run scripts/fetch_wine.py to download winequality-white.csv"
        )
    table = load_csv(path, outputs=WINE_OUTPUT, delimiter=delimiter)
    spec = parse_transform_spec(transforms)
    if spec:
        table = apply_transforms(table, spec)
    x11, y = table.x, table.y[:, 0]
    x77 = expand_features(x11, ExpansionSpec())
    train, test = stratified_split(y, 0.2, seed)
    rep = ExperimentReport(
        "wine",
        meta={"seed": seed, "n": int(y.size), "transforms": spec, "n_train": int(train.size), "n_test": int(test.size)},
    )
    rows = []
    for nvars, x in ((11, x11), (77, x77)):
        for method in ("OLS", "PCR", "PLS"):
            L = WINE_COMPONENTS.get((method, nvars))
            k = x.shape[1] if method == "OLS" else L
            fitted = _linear_fit(method, x, y, L)(x)
            adj = adjusted_r2(y, fitted, k)
            acc = rounding_accuracy(y[test], _linear_fit(method, x[train], y[train], L)(x[test]))
            ref_r2, ref_acc = WINE_TABLE[(method, nvars)]
            rows.append(
                {"method": method, "variables": nvars, "components": L if L else nvars, "adj_r2": adj, "oos_acc": acc,
                 "published_adj_r2": ref_r2, "published_oos_acc": ref_acc}
            )
            if (method, nvars) in WINE_R2_TOL:
                rep.checks.append(_within(f"{method} {nvars}-var adj R^2", adj, ref_r2, WINE_R2_TOL[(method, nvars)]))
            rep.checks.append(_within(f"{method} {nvars}-var OOS accuracy", acc, ref_acc, WINE_ACC_TOL))
    rep.tables["comparison"] = rows
    rep.tables["scree_77"] = scree_rows(x77, y)
    m = fit_pls(x11, y, 2)
    rep.tables["correlation_circle_11"] = correlation_circle(x11, y, m, table.input_names, table.output_names).rows()
    if with_net:
        acc_net, acc_sub, fallbacks = _net_and_substitution(x77[train], y[train], x77[test], y[test], seed)
        rep.meta["spline_fallbacks"] = fallbacks
        rep.tables["network"] = [{"model": "network", "oos_acc": acc_net}, {"model": "brillinger", "oos_acc": acc_sub}]
        rep.checks.append(_within("Brillinger substitution accuracy", acc_sub, acc_net, NET_SUBSTITUTION_TOL))
    return rep


def run(name: str, **kwargs) -> ExperimentReport:
    if name == "relu-tanh":
        return relu_tanh(**kwargs)
    if name == "independent-sim":
        return independent_sim(**kwargs)
    if name == "wine":
        return wine(**kwargs)
    raise DataError(f"experiment must be one of {EXPERIMENTS}")
