"""Regression trees whose splits run along the node's first PLS score.

At each node the data are centred, ``w = X'y / |X'y|^2`` and ``t = X w``.
Observations are sorted by decreasing t and every admissible cut into a
high-score part (size N1) and a low-score part (size N2) is scored by

    (1-b) * (a (Var y1 + Var y2) / Var y + (1-a) (Var t1 + Var t2) / Var t)
        + b * (N1 - N2)^2 / (N1 + N2)^2

with population variances. The smallest value wins (first index on ties).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..errors import DataError


@dataclass(frozen=True)
class TreeConfig:
    a: float = 0.5
    b: float = 0.1
    min_leaf: int = 2
    max_depth: int = 3

    def __post_init__(self):
        if not 0 <= self.a <= 1 or not 0 <= self.b <= 1:
            raise DataError("a and b must lie in [0, 1]")
        if self.min_leaf < 2:
            raise DataError("min leaf size must be >= 2")
        if self.max_depth < 0:
            raise DataError("max depth must be >= 0")

    def to_dict(self) -> dict:
        return asdict(self)


def _prefix_var(v: np.ndarray):
    """Population variances of all prefixes and suffixes of v (prefix sizes 1..n-1)."""
    n = v.shape[0]
    c1 = np.cumsum(v)
    c2 = np.cumsum(v * v)
    k = np.arange(1, n)
    left_mean = c1[:-1] / k
    left = c2[:-1] / k - left_mean**2
    rs1 = c1[-1] - c1[:-1]
    rs2 = c2[-1] - c2[:-1]
    right_mean = rs1 / (n - k)
    right = rs2 / (n - k) - right_mean**2
    return np.maximum(left, 0.0), np.maximum(right, 0.0)


def split_criterion(t_sorted, y_sorted, a: float, b: float) -> np.ndarray:
    """Criterion for each cut ``i = 1..n-1`` (left part = first i sorted rows).

    Entry ``i-1`` belongs to the cut with N1 = i. A zero total variance makes
    its ratio term 0.
    """
    t = np.asarray(t_sorted, dtype=float)
    y = np.asarray(y_sorted, dtype=float)
    n = t.shape[0]
    if n < 2:
        return np.empty(0)
    vy_l, vy_r = _prefix_var(y)
    vt_l, vt_r = _prefix_var(t)
    vy, vt = y.var(), t.var()
    ry = (vy_l + vy_r) / vy if vy > 0 else np.zeros(n - 1)
    rt = (vt_l + vt_r) / vt if vt > 0 else np.zeros(n - 1)
    n1 = np.arange(1, n)
    balance = ((n1 - (n - n1)) / n) ** 2
    return (1 - b) * (a * ry + (1 - a) * rt) + b * balance


def best_split(t_sorted, y_sorted, a: float, b: float, min_leaf: int) -> tuple[int, float] | None:
    """Argmin over admissible cuts; returns ``(N1, criterion)`` or None."""
    n = len(t_sorted)
    if n < 2 * min_leaf:
        return None
    crit = split_criterion(t_sorted, y_sorted, a, b)
    lo, hi = min_leaf, n - min_leaf  # admissible N1 values
    window = crit[lo - 1:hi]
    j = int(np.argmin(window))
    return lo + j, float(window[j])


def node_direction(x, y):
    """Centred-data PLS direction ``X'y / |X'y|^2`` and the node means, or None if X'y = 0."""
    xm = x.mean(axis=0)
    ym = y.mean()
    xty = (x - xm).T @ (y - ym)
    nrm = float(np.linalg.norm(xty))
    if nrm == 0 or nrm <= 1e-12 * np.linalg.norm(x - xm) * np.linalg.norm(y - ym):
        return None
    return xty / nrm**2, xm


@dataclass
class TreeNode:
    value: float
    n: int
    depth: int
    direction: np.ndarray | None = None
    center: np.ndarray | None = None
    threshold: float | None = None
    criterion: float | None = None
    high: "TreeNode | None" = None
    low: "TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.high is None

    def to_dict(self) -> dict:
        d = {"value": self.value, "n": self.n, "depth": self.depth}
        if not self.is_leaf:
            d.update(
                direction=self.direction.tolist(),
                center=self.center.tolist(),
                threshold=self.threshold,
                criterion=self.criterion,
                high=self.high.to_dict(),
                low=self.low.to_dict(),
            )
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TreeNode":
        node = cls(d["value"], d["n"], d["depth"])
        if "high" in d:
            node.direction = np.asarray(d["direction"], dtype=float)
            node.center = np.asarray(d["center"], dtype=float)
            node.threshold = d["threshold"]
            node.criterion = d["criterion"]
            node.high = cls.from_dict(d["high"])
            node.low = cls.from_dict(d["low"])
        return node


def _grow(x, y, cfg: TreeConfig, depth: int) -> TreeNode:
    node = TreeNode(float(y.mean()), y.shape[0], depth)
    if depth >= cfg.max_depth or y.shape[0] < 2 * cfg.min_leaf or not y.var() > 0:
        return node
    found = node_direction(x, y)
    if found is None:
        return node
    w, xm = found
    t = (x - xm) @ w
    order = np.argsort(-t, kind="stable")
    split = best_split(t[order], y[order], cfg.a, cfg.b, cfg.min_leaf)
    if split is None:
        return node
    n1, crit = split
    ts = t[order]
    node.direction, node.center = w, xm
    node.threshold = 0.5 * (ts[n1 - 1] + ts[n1])
    node.criterion = crit
    hi, lo = order[:n1], order[n1:]
    node.high = _grow(x[hi], y[hi], cfg, depth + 1)
    node.low = _grow(x[lo], y[lo], cfg, depth + 1)
    return node


@dataclass
class PlsTree:
    root: TreeNode
    config: TreeConfig

    def predict(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        out = np.empty(x.shape[0])
        for i, row in enumerate(x):
            node = self.root
            while not node.is_leaf:
                t = (row - node.center) @ node.direction
                node = node.high if t >= node.threshold else node.low
            out[i] = node.value
        return out

    def leaves(self) -> list[TreeNode]:
        stack, out = [self.root], []
        while stack:
            node = stack.pop()
            if node.is_leaf:
                out.append(node)
            else:
                stack += [node.low, node.high]
        return out

    def to_dict(self) -> dict:
        return {"config": self.config.to_dict(), "root": self.root.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "PlsTree":
        return cls(TreeNode.from_dict(d["root"]), TreeConfig(**d["config"]))


def fit_pls_tree(x, y, cfg: TreeConfig = TreeConfig()) -> PlsTree:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    y = np.asarray(y, dtype=float).ravel()
    if x.shape[0] != y.shape[0]:
        raise DataError("row mismatch between x and y")
    if y.shape[0] < 2 * cfg.min_leaf:
        raise DataError(f"need at least {2 * cfg.min_leaf} rows for min leaf size {cfg.min_leaf}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise DataError("non-finite training data")
    return PlsTree(_grow(x, y, cfg, 0), cfg)


@dataclass
class TreeInner:
    """One PLS-tree per target column, all reading the full score vector."""

    trees: list[PlsTree]
    kind: str = "tree"
    per_score: bool = False

    def predict(self, t) -> np.ndarray:
        return np.column_stack([tree.predict(t) for tree in self.trees])

    def to_dict(self) -> dict:
        return {"kind": self.kind, "trees": [tr.to_dict() for tr in self.trees]}

    @classmethod
    def from_dict(cls, d: dict) -> "TreeInner":
        return cls([PlsTree.from_dict(tr) for tr in d["trees"]])


def fit_tree_inner(t, u, cfg: TreeConfig = TreeConfig()) -> TreeInner:
    u = np.asarray(u, dtype=float)
    if u.ndim == 1:
        u = u[:, None]
    return TreeInner([fit_pls_tree(t, u[:, k], cfg) for k in range(u.shape[1])])
