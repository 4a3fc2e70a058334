"""The composed predictor: PLS scores, an inner model on the scores, then ``U Q``.

Per-score inner models (linear slopes, GPs) learn each deflated Y-score
``u_k`` from ``t_k``. Joint models (MLP, autoencoder, tree) learn the
reconciled targets stored on the PLS model, whose image under Q reproduces
the PLS fit. In the linear case both routes give the PLS coefficients.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .bayes import LastLayer, fit_last_layer
from .dataset import ExpansionSpec, expand_features, transform_column
from .errors import DataError
from .inner import (
    INNER_KINDS,
    GpConfig,
    MlpConfig,
    TreeConfig,
    fit_autoencoder,
    fit_linear,
    fit_mlp,
    fit_per_score_gp,
    fit_tree_inner,
    inner_from_dict,
)
from .pls import CvCurve, PlsModel, fit_pls, scores, select_components_cv

log = logging.getLogger(__name__)

MODEL_FORMAT = "dlpls-model"
MODEL_VERSION = 1


def inner_targets(pls: PlsModel, per_score: bool) -> np.ndarray:
    return pls.y_scores if per_score else pls.y_targets


def fit_inner(pls: PlsModel, kind: str = "linear", config=None, bottleneck: int | None = None):
    """Fit inner model ``kind`` on the training scores of ``pls``."""
    t = pls.x_scores
    if kind == "linear":
        if pls.inner_mode == "matrix":
            return fit_linear(t, pls.y_targets, per_score=False)
        return fit_linear(t, pls.y_scores, per_score=True)
    if kind == "gp":
        return fit_per_score_gp(t, pls.y_scores, config)
    u = pls.y_targets
    if kind == "mlp":
        return fit_mlp(t, u, config or MlpConfig())
    if kind == "autoencoder":
        L = t.shape[1]
        width = bottleneck if bottleneck is not None else max(1, L // 2)
        return fit_autoencoder(t, u, width, config or MlpConfig())
    if kind == "tree":
        return fit_tree_inner(t, u, config or TreeConfig())
    raise DataError(f"inner model must be one of {INNER_KINDS}, got {kind!r}")


def predict_scores(pls: PlsModel, inner, x_new) -> np.ndarray:
    return inner.predict(scores(pls, x_new))


def predict_pipeline(pls: PlsModel, inner, x_new) -> np.ndarray:
    """``Y* = G(T*) Q`` mapped back to raw Y units; ``x_new`` is in PLS-input units."""
    u_hat = predict_scores(pls, inner, x_new)
    return pls.y_standardization.invert(u_hat @ pls.y_loadings)


@dataclass
class DlPlsModel:
    """Everything needed to go from raw input columns to predictions."""

    pls: PlsModel
    inner: object
    input_names: list[str]
    output_names: list[str]
    transforms: dict = field(default_factory=dict)
    expansion: ExpansionSpec | None = None
    cv: CvCurve | None = None
    last_layer: LastLayer | None = None

    def features(self, x_raw) -> np.ndarray:
        """Transforms, then expansion: raw input columns to PLS-input columns."""
        x = np.array(x_raw, dtype=float, ndmin=2)
        if x.shape[1] != len(self.input_names):
            raise DataError(f"expected {len(self.input_names)} input columns, got {x.shape[1]}")
        for j, name in enumerate(self.input_names):
            tag = self.transforms.get(name, "none")
            if tag != "none":
                x[:, j] = transform_column(x[:, j], tag)
        if self.expansion is not None:
            x = expand_features(x, self.expansion)
        return x

    def predict(self, x_raw) -> np.ndarray:
        return predict_pipeline(self.pls, self.inner, self.features(x_raw))

    def predict_bayes(self, x_raw):
        if self.last_layer is None:
            raise DataError("model has no Bayesian last layer")
        return self.last_layer.predict(predict_scores(self.pls, self.inner, self.features(x_raw)))

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "package_version": __version__,
            "input_names": list(self.input_names),
            "output_names": list(self.output_names),
            "transforms": dict(self.transforms),
            "expansion": None if self.expansion is None else self.expansion.to_dict(),
            "pls": self.pls.to_dict(include_training=False),
            "inner": self.inner.to_dict(),
            "cv": None if self.cv is None else self.cv.to_dict(),
            "last_layer": None if self.last_layer is None else self.last_layer.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DlPlsModel":
        if d.get("format") != MODEL_FORMAT:
            raise DataError("not a model document")
        if d.get("version") != MODEL_VERSION:
            raise DataError(f"unsupported model version {d.get('version')!r}")
        return cls(
            pls=PlsModel.from_dict(d["pls"]),
            inner=inner_from_dict(d["inner"]),
            input_names=list(d["input_names"]),
            output_names=list(d["output_names"]),
            transforms=dict(d.get("transforms") or {}),
            expansion=None if d.get("expansion") is None else ExpansionSpec(**d["expansion"]),
            cv=None if d.get("cv") is None else CvCurve.from_dict(d["cv"]),
            last_layer=None if d.get("last_layer") is None else LastLayer.from_dict(d["last_layer"]),
        )


def fit_dlpls(
    x,
    y,
    n_components: int | None = None,
    inner: str = "linear",
    inner_config=None,
    bottleneck: int | None = None,
    folds: int = 5,
    seed: int = 0,
    input_names=None,
    output_names=None,
    transforms=None,
    expansion: ExpansionSpec | None = None,
    bayes: bool = False,
    prior_var: float = 0.1,
    noise_var: float | None = None,
) -> DlPlsModel:
    """Run transform -> expand -> standardize -> PLS -> inner model (-> Bayes layer).

    ``x`` holds raw input columns. ``n_components=None`` chooses L by
    ``folds``-fold cross-validation.
    """
    x = np.array(x, dtype=float, ndmin=2)
    y = np.asarray(y, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    if x.shape[0] == 0:
        raise DataError("no rows")
    input_names = list(input_names) if input_names is not None else [f"x{j + 1}" for j in range(x.shape[1])]
    output_names = list(output_names) if output_names is not None else [f"y{j + 1}" for j in range(y.shape[1])]
    shell = DlPlsModel(None, None, input_names, output_names, dict(transforms or {}), expansion)
    feats = shell.features(x)
    cv = None
    if n_components is None:
        cv = select_components_cv(feats, y, folds=folds, seed=seed)
        n_components = cv.chosen
        log.info("cross-validation chose %d components", n_components)
    pls = fit_pls(feats, y, n_components)
    model = fit_inner(pls, inner, inner_config, bottleneck)
    shell.pls, shell.inner, shell.cv = pls, model, cv
    if bayes:
        u_hat = model.predict(pls.x_scores)
        ys = pls.y_standardization
        shell.last_layer = fit_last_layer(u_hat, ys.values, ys.means, ys.scales, prior_var, noise_var)
    return shell


def inner_config_from_dict(kind: str, d: dict | None):
    if not d:
        return None
    if kind in ("mlp", "autoencoder"):
        return MlpConfig(**d)
    if kind == "gp":
        return GpConfig(**d)
    if kind == "tree":
        return TreeConfig(**d)
    return None
