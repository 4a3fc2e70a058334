"""Inner models G mapping X-scores T to Y-scores U."""

from __future__ import annotations

from ..errors import DataError
from .gp import GpConfig, GpModel, PerScoreGp, fit_gp, fit_per_score_gp, gp_predict
from .linear import LinearInner, fit_linear
from .mlp import MlpConfig, MlpModel, fit_autoencoder, fit_mlp
from .tree import PlsTree, TreeConfig, TreeInner, fit_pls_tree, fit_tree_inner

INNER_KINDS = ("linear", "mlp", "autoencoder", "gp", "tree")


def inner_from_dict(d: dict):
    kind = d["kind"]
    if kind == "linear":
        return LinearInner.from_dict(d)
    if kind in ("mlp", "autoencoder"):
        return MlpModel.from_dict(d)
    if kind == "gp":
        return PerScoreGp.from_dict(d)
    if kind == "tree":
        return TreeInner.from_dict(d)
    raise DataError(f"unknown inner model kind {kind!r}")


__all__ = [
    "INNER_KINDS",
    "GpConfig",
    "GpModel",
    "LinearInner",
    "MlpConfig",
    "MlpModel",
    "PerScoreGp",
    "PlsTree",
    "TreeConfig",
    "TreeInner",
    "fit_autoencoder",
    "fit_gp",
    "fit_linear",
    "fit_mlp",
    "fit_per_score_gp",
    "fit_pls_tree",
    "fit_tree_inner",
    "gp_predict",
    "inner_from_dict",
]
