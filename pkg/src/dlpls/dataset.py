"""Tabular ingestion, per-column transforms, feature expansion and standardization."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DataError

log = logging.getLogger(__name__)

TRANSFORMS = ("none", "log", "log1p", "sqrt")

WINE_OUTPUT = "quality"
# Right-skewed wine columns get log1p; everything else is left alone.
WINE_TRANSFORMS = {
    "volatile acidity": "log1p",
    "residual sugar": "log1p",
    "chlorides": "log1p",
    "free sulfur dioxide": "log1p",
    "total sulfur dioxide": "log1p",
}

MAX_EXPANDED_COLUMNS = 200_000


@dataclass(frozen=True)
class RawTable:
    column_names: list[str]
    values: np.ndarray
    output_columns: list[int]
    rejected_rows: int = 0

    def __post_init__(self):
        if len(set(self.column_names)) != len(self.column_names):
            raise DataError("duplicate column names")
        if self.values.ndim != 2 or self.values.shape[1] != len(self.column_names):
            raise DataError("values shape does not match column names")
        if any(not 0 <= c < len(self.column_names) for c in self.output_columns):
            raise DataError("output column index out of range")

    @property
    def input_columns(self) -> list[int]:
        outs = set(self.output_columns)
        return [j for j in range(len(self.column_names)) if j not in outs]

    @property
    def input_names(self) -> list[str]:
        return [self.column_names[j] for j in self.input_columns]

    @property
    def output_names(self) -> list[str]:
        return [self.column_names[j] for j in self.output_columns]

    @property
    def x(self) -> np.ndarray:
        return self.values[:, self.input_columns]

    @property
    def y(self) -> np.ndarray:
        return self.values[:, self.output_columns]

    @property
    def n(self) -> int:
        return self.values.shape[0]


def _resolve_outputs(names: list[str], outputs) -> list[int]:
    if outputs is None:
        return []
    if isinstance(outputs, (str, int)):
        outputs = [outputs]
    idx = []
    for o in outputs:
        if isinstance(o, int):
            if not 0 <= o < len(names):
                raise DataError(f"output column index {o} out of range")
            idx.append(o)
        elif o in names:
            idx.append(names.index(o))
        else:
            raise DataError(f"unknown output column {o!r}")
    return idx


def load_csv(
    path,
    outputs=None,
    delimiter: str = ",",
    nonfinite: str = "reject",
) -> RawTable:
    """Read a numeric CSV with a header row.

    Parameters
    ----------
    path : path-like
    outputs : column name, index, or a list of them
        Columns designated as Y.
    delimiter : str
        Field delimiter; the UCI wine files use ``';'``.
    nonfinite : {"reject", "drop"}
        What to do with rows holding NaN/inf cells.
    """
    if nonfinite not in ("reject", "drop"):
        raise DataError(f"nonfinite policy must be 'reject' or 'drop', got {nonfinite!r}")
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        names = [h.strip().strip('"') for h in header]
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            if not rec or all(not c.strip() for c in rec):
                continue
            if len(rec) != len(names):
                raise DataError(f"{path}:{lineno}: expected {len(names)} fields, got {len(rec)}")
            try:
                rows.append([float(c) for c in rec])
            except ValueError:
                bad = next(c for c in rec if not _is_float(c))
                raise DataError(f"{path}:{lineno}: non-numeric cell {bad!r}") from None
    out_idx = _resolve_outputs(names, outputs)
    values = np.array(rows, dtype=float).reshape(len(rows), len(names))
    finite = np.all(np.isfinite(values), axis=1)
    rejected = int(np.sum(~finite))
    if rejected:
        if nonfinite == "reject":
            first = int(np.argmin(finite))
            raise DataError(f"{path}: non-finite value in data row {first}")
        values = values[finite]
        log.info("dropped %d rows with non-finite cells", rejected)
    log.info("loaded %s: %d rows, %d columns, %d rejected", path, values.shape[0], len(names), rejected)
    return RawTable(names, values, out_idx, rejected)


def _is_float(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


def parse_transform_spec(text: str | None) -> dict[str, str]:
    """Parse ``"name:log,other:sqrt"`` (or the preset ``"wine"``)."""
    if not text:
        return {}
    if text.strip() == "wine":
        return dict(WINE_TRANSFORMS)
    spec = {}
    for item in text.split(","):
        name, _, tag = item.rpartition(":")
        if not name or tag not in TRANSFORMS:
            raise DataError(f"bad transform entry {item!r}; expected name:{'|'.join(TRANSFORMS)}")
        spec[name.strip()] = tag
    return spec


def transform_column(values: np.ndarray, tag: str) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    if tag == "none":
        return v.copy()
    if tag == "log":
        bad = np.flatnonzero(v <= 0)
        if bad.size:
            raise DataError(f"log domain violation at row {bad[0]}")
        return np.log(v)
    if tag == "log1p":
        bad = np.flatnonzero(v <= -1)
        if bad.size:
            raise DataError(f"log1p domain violation at row {bad[0]}")
        return np.log1p(v)
    if tag == "sqrt":
        bad = np.flatnonzero(v < 0)
        if bad.size:
            raise DataError(f"sqrt domain violation at row {bad[0]}")
        return np.sqrt(v)
    raise DataError(f"unknown transform {tag!r}")


def apply_transforms(table: RawTable, spec: dict[str, str]) -> RawTable:
    """Apply per-column transforms; transformed names become ``tag(name)``."""
    unknown = set(spec) - set(table.column_names)
    if unknown:
        raise DataError(f"transform refers to unknown columns: {sorted(unknown)}")
    values = table.values.copy()
    names = list(table.column_names)
    for j, name in enumerate(table.column_names):
        tag = spec.get(name, "none")
        if tag == "none":
            continue
        try:
            values[:, j] = transform_column(values[:, j], tag)
        except DataError as exc:
            raise DataError(f"column {name!r}: {exc}") from None
        names[j] = f"{tag}({name})"
    return RawTable(names, values, list(table.output_columns), table.rejected_rows)


@dataclass(frozen=True)
class ExpansionSpec:
    include_linear: bool = True
    include_quadratics: bool = True
    include_pairwise_interactions: bool = True

    def n_columns(self, p: int) -> int:
        return (
            p * self.include_linear
            + p * self.include_quadratics
            + p * (p - 1) // 2 * self.include_pairwise_interactions
        )

    def to_dict(self) -> dict:
        return {
            "include_linear": self.include_linear,
            "include_quadratics": self.include_quadratics,
            "include_pairwise_interactions": self.include_pairwise_interactions,
        }


def expand_features(x, spec: ExpansionSpec = ExpansionSpec()) -> np.ndarray:
    """Hoadley-style expansion: linear block, squares, then x_i*x_j for i<j."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[1] < 1:
        raise DataError("expand_features needs an n x p block with p >= 1")
    p = x.shape[1]
    if spec.n_columns(p) > MAX_EXPANDED_COLUMNS:
        raise DataError(f"expansion of {p} columns exceeds {MAX_EXPANDED_COLUMNS} features")
    blocks = []
    if spec.include_linear:
        blocks.append(x)
    if spec.include_quadratics:
        blocks.append(x**2)
    if spec.include_pairwise_interactions and p > 1:
        i, j = np.triu_indices(p, k=1)
        blocks.append(x[:, i] * x[:, j])
    if not blocks:
        return np.empty((x.shape[0], 0))
    return np.hstack(blocks)


def expanded_names(names: Sequence[str], spec: ExpansionSpec = ExpansionSpec()) -> list[str]:
    names = list(names)
    out = []
    if spec.include_linear:
        out += names
    if spec.include_quadratics:
        out += [f"{a}^2" for a in names]
    if spec.include_pairwise_interactions:
        p = len(names)
        out += [f"{names[i]}*{names[j]}" for i in range(p) for j in range(i + 1, p)]
    return out


@dataclass(frozen=True)
class StandardizedMatrix:
    """Column-standardized block with the parameters needed to undo it.

    ``scales`` are sample standard deviations (n-1 denominator); constant
    columns get scale 1 and are marked in ``degenerate``.
    """

    values: np.ndarray
    means: np.ndarray
    scales: np.ndarray
    degenerate: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.degenerate is None:
            object.__setattr__(self, "degenerate", np.zeros(self.means.shape, dtype=bool))

    @property
    def shape(self):
        return self.values.shape

    def apply(self, x) -> np.ndarray:
        """Standardize new rows with the stored training parameters."""
        x = np.asarray(x, dtype=float)
        x2 = x[:, None] if x.ndim == 1 else x
        if x2.shape[1] != self.means.shape[0]:
            raise DataError(f"expected {self.means.shape[0]} columns, got {x2.shape[1]}")
        out = (x2 - self.means) / self.scales
        return out[:, 0] if x.ndim == 1 else out

    def invert(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        return z * self.scales + self.means

    def params(self) -> dict:
        return {
            "means": self.means.tolist(),
            "scales": self.scales.tolist(),
            "degenerate": self.degenerate.tolist(),
        }

    @classmethod
    def from_params(cls, params: dict, values=None) -> "StandardizedMatrix":
        means = np.asarray(params["means"], dtype=float)
        return cls(
            values=np.empty((0, means.shape[0])) if values is None else np.asarray(values, float),
            means=means,
            scales=np.asarray(params["scales"], dtype=float),
            degenerate=np.asarray(params.get("degenerate", [False] * len(means)), dtype=bool),
        )


def standardize(x) -> StandardizedMatrix:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n = x.shape[0]
    if n == 0:
        raise DataError("no rows")
    means = x.mean(axis=0)
    scales = x.std(axis=0, ddof=1) if n > 1 else np.zeros(x.shape[1])
    degenerate = ~(scales > 0)
    scales = np.where(degenerate, 1.0, scales)
    if degenerate.any():
        log.warning("%d constant column(s) flagged degenerate", int(degenerate.sum()))
    return StandardizedMatrix((x - means) / scales, means, scales, degenerate)


def destandardize(s: StandardizedMatrix) -> np.ndarray:
    return s.invert(s.values)
