"""Dense feed-forward regression network trained by mini-batch gradient
descent (with classical momentum) on mean squared error.

The forward/backward pass is exposed as :func:`loss_and_gradients` so the
analytic gradients can be checked against finite differences.
"""

from __future__ import annotations

import numpy as np

from ..dataset import rng_from_seed
from ..errors import DivergenceDetected
from .base import LearnerSpec, Scaler, TrainedModel, _envelope_kwargs, train_relative_rmse

ACTIVATIONS = ("tanh", "sigmoid")


def _act(z: np.ndarray, kind: str) -> np.ndarray:
    if kind == "tanh":
        return np.tanh(z)
    return 1.0 / (1.0 + np.exp(-z))


def _act_deriv(a: np.ndarray, kind: str) -> np.ndarray:
    # expressed in terms of the activation output
    if kind == "tanh":
        return 1.0 - a ** 2
    return a * (1.0 - a)


def init_params(layer_sizes: list[int], rng: np.random.Generator) -> list[tuple[np.ndarray, np.ndarray]]:
    """Glorot-style uniform init; layer_sizes includes input and output."""
    params = []
    for n_in, n_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        limit = np.sqrt(6.0 / (n_in + n_out))
        W = rng.uniform(-limit, limit, size=(n_in, n_out))
        b = np.zeros(n_out)
        params.append((W, b))
    return params


def forward(params, X: np.ndarray, activation: str) -> np.ndarray:
    a = X
    for i, (W, b) in enumerate(params):
        z = a @ W + b
        a = z if i == len(params) - 1 else _act(z, activation)
    return a.ravel()


def loss_and_gradients(params, X: np.ndarray, y: np.ndarray, activation: str):
    """MSE loss and its gradient for every (W, b); linear output layer."""
    acts = [X]
    a = X
    for i, (W, b) in enumerate(params):
        z = a @ W + b
        a = z if i == len(params) - 1 else _act(z, activation)
        acts.append(a)
    pred = acts[-1].ravel()
    resid = pred - y
    n = len(y)
    loss = float(np.mean(resid ** 2))

    grads = [None] * len(params)
    delta = (2.0 / n) * resid.reshape(-1, 1)
    for i in range(len(params) - 1, -1, -1):
        W, _ = params[i]
        grads[i] = (acts[i].T @ delta, delta.sum(axis=0))
        if i > 0:
            delta = (delta @ W.T) * _act_deriv(acts[i], activation)
    return loss, grads


class MlpModel(TrainedModel):
    model_kind = "mlp"

    def __init__(self, params, activation: str, **kwargs):
        super().__init__(**kwargs)
        self.params = [(np.asarray(W, dtype=float), np.asarray(b, dtype=float)) for W, b in params]
        self.activation = activation

    def _predict_standardized(self, Xz: np.ndarray) -> np.ndarray:
        return forward(self.params, Xz, self.activation)

    def _parameters_dict(self) -> dict:
        return {
            "activation": self.activation,
            "layers": [{"W": W.tolist(), "b": b.tolist()} for W, b in self.params],
        }

    @classmethod
    def _from_dict(cls, d: dict) -> "MlpModel":
        p = d["parameters"]
        params = [(np.array(layer["W"]), np.array(layer["b"])) for layer in p["layers"]]
        return cls(params=params, activation=p["activation"], **_envelope_kwargs(d))


def train_mlp(X: np.ndarray, y: np.ndarray,
              hidden_layers: list[int] = (105, 60, 44, 30),
              activation: str = "tanh",
              learning_rate: float = 0.05,
              epochs: int = 200,
              batch_size: int | None = None,
              momentum: float = 0.9,
              seed: int = 0) -> MlpModel:
    """Train on z-scored data; ``batch_size=None`` means full batch.

    Raises :class:`DivergenceDetected` when the loss goes non-finite.
    """
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    if any(h < 1 for h in hidden_layers):
        raise ValueError("layer sizes must be >= 1")
    if activation not in ACTIVATIONS:
        raise ValueError(f"activation must be one of {ACTIVATIONS}")

    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    x_scaler = Scaler.fit(X)
    y_scaler = Scaler.fit(y.reshape(-1, 1))
    Xz = x_scaler.transform(X)
    yz = y_scaler.transform(y.reshape(-1, 1)).ravel()

    n, p = Xz.shape
    rng = rng_from_seed(seed)
    params = init_params([p, *hidden_layers, 1], rng)
    velocity = [(np.zeros_like(W), np.zeros_like(b)) for W, b in params]

    bs = n if batch_size is None else min(batch_size, n)
    for epoch in range(epochs):
        order = rng.permutation(n) if bs < n else np.arange(n)
        for start in range(0, n, bs):
            idx = order[start:start + bs]
            loss, grads = loss_and_gradients(params, Xz[idx], yz[idx], activation)
            if not np.isfinite(loss):
                raise DivergenceDetected(
                    f"training loss became non-finite at epoch {epoch}"
                )
            new_params = []
            new_velocity = []
            for (W, b), (vW, vb), (gW, gb) in zip(params, velocity, grads):
                vW = momentum * vW - learning_rate * gW
                vb = momentum * vb - learning_rate * gb
                new_params.append((W + vW, b + vb))
                new_velocity.append((vW, vb))
            params, velocity = new_params, new_velocity

    spec = LearnerSpec("mlp", {
        "hidden_layers": list(hidden_layers), "activation": activation,
        "learning_rate": learning_rate, "epochs": epochs,
        "batch_size": batch_size, "momentum": momentum, "seed": seed,
    })
    model = MlpModel(params=params, activation=activation, spec=spec,
                     x_scaler=x_scaler, y_scaler=y_scaler)
    model.training_stats = {
        "train_rmse_rel": train_relative_rmse(model, X, y),
        "epochs_or_trees": epochs,
    }
    return model
