"""Feed-forward networks trained by plain mini-batch SGD on squared error."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from ..errors import DataError, NumericalError

ACTIVATIONS = ("relu", "tanh", "identity")


def _act(name, z):
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "tanh":
        return np.tanh(z)
    return z


def _act_grad(name, z, a):
    if name == "relu":
        return (z > 0).astype(z.dtype)
    if name == "tanh":
        return 1.0 - a * a
    return np.ones_like(z)


@dataclass(frozen=True)
class MlpConfig:
    hidden: tuple[int, ...] = (16,)
    activation: str = "relu"
    learning_rate: float = 0.01
    epochs: int = 200
    batch_size: int = 32
    seed: int = 0
    init_scale: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        if any(h < 1 for h in self.hidden):
            raise DataError("hidden widths must be >= 1")
        if self.epochs < 1:
            raise DataError("epochs must be >= 1")
        if not self.learning_rate > 0:
            raise DataError("learning rate must be positive")
        if self.batch_size < 1:
            raise DataError("batch size must be >= 1")
        if self.activation not in ACTIVATIONS:
            raise DataError(f"activation must be one of {ACTIVATIONS}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hidden"] = list(self.hidden)
        return d


@dataclass
class MlpModel:
    """Fitted network; the output layer is linear."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    config: MlpConfig
    initial_loss: float = float("nan")
    loss_trace: list[float] = field(default_factory=list)
    kind: str = "mlp"
    per_score: bool = False

    def forward(self, x):
        acts = [np.asarray(x, dtype=float)]
        pre = []
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = acts[-1] @ w + b
            pre.append(z)
            acts.append(z if i == last else _act(self.config.activation, z))
        return pre, acts

    def predict(self, t) -> np.ndarray:
        return self.forward(t)[1][-1]

    def hidden_features(self, t, layer: int = -1) -> np.ndarray:
        """Activations of hidden layer ``layer`` (default: the last hidden layer)."""
        acts = self.forward(t)[1]
        hidden = acts[1:-1]
        if not hidden:
            raise DataError("network has no hidden layer")
        return hidden[layer]

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "config": self.config.to_dict(),
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
            "initial_loss": self.initial_loss,
            "loss_trace": list(self.loss_trace),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MlpModel":
        cfg = MlpConfig(**d["config"])
        return cls(
            weights=[np.asarray(w, dtype=float) for w in d["weights"]],
            biases=[np.asarray(b, dtype=float) for b in d["biases"]],
            config=cfg,
            initial_loss=d.get("initial_loss", float("nan")),
            loss_trace=list(d.get("loss_trace", [])),
            kind=d.get("kind", "mlp"),
        )


def _mse(pred, target) -> float:
    return float(np.mean((pred - target) ** 2))


def _init(sizes, rng, scale):
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        s = scale if scale is not None else 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-s, s, size=(fan_in, fan_out)))
        biases.append(rng.uniform(-s, s, size=fan_out))
    return weights, biases


def fit_mlp(t, u, cfg: MlpConfig = MlpConfig(), kind: str = "mlp") -> MlpModel:
    """Train ``t -> u`` with mini-batch SGD on mean squared error.

    The loss trace holds the full-data training MSE after each epoch; the
    loss before the first update is kept in ``initial_loss``.
    """
    t = np.asarray(t, dtype=float)
    u = np.asarray(u, dtype=float)
    if t.ndim == 1:
        t = t[:, None]
    if u.ndim == 1:
        u = u[:, None]
    if t.shape[0] != u.shape[0]:
        raise DataError("row mismatch between inputs and targets")
    if not (np.all(np.isfinite(t)) and np.all(np.isfinite(u))):
        raise DataError("non-finite training data")
    n = t.shape[0]
    rng = np.random.default_rng(cfg.seed)
    sizes = (t.shape[1],) + cfg.hidden + (u.shape[1],)
    weights, biases = _init(sizes, rng, cfg.init_scale)
    model = MlpModel(weights, biases, cfg, kind=kind)
    model.initial_loss = _mse(model.predict(t), u)
    lr = cfg.learning_rate
    nlayers = len(weights)
    # divergence is detected on the epoch loss below; overflow warnings add nothing
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(cfg.epochs):
            order = rng.permutation(n)
            for start in range(0, n, cfg.batch_size):
                idx = order[start:start + cfg.batch_size]
                pre, acts = model.forward(t[idx])
                grad = 2.0 * (acts[-1] - u[idx]) / (len(idx) * u.shape[1])
                for i in range(nlayers - 1, -1, -1):
                    gw = acts[i].T @ grad
                    gb = grad.sum(axis=0)
                    if i > 0:
                        grad = (grad @ weights[i].T) * _act_grad(cfg.activation, pre[i - 1], acts[i])
                    weights[i] -= lr * gw
                    biases[i] -= lr * gb
            loss = _mse(model.predict(t), u)
            if not np.isfinite(loss):
                raise NumericalError(f"SGD diverged at epoch {epoch + 1} (loss {loss})")
            model.loss_trace.append(loss)
    return model


def fit_autoencoder(t, u, bottleneck: int, cfg: MlpConfig = MlpConfig()) -> MlpModel:
    """Bottleneck network ``L -> bottleneck -> L``; ``cfg.hidden`` is ignored."""
    t = np.asarray(t, dtype=float)
    L = t.shape[1] if t.ndim == 2 else 1
    if not 1 <= bottleneck < L:
        raise DataError(f"bottleneck width must be in 1..{L - 1} for {L} scores, got {bottleneck}")
    cfg = MlpConfig(**{**cfg.to_dict(), "hidden": (bottleneck,)})
    return fit_mlp(t, u, cfg, kind="autoencoder")
