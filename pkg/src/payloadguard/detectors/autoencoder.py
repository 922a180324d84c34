"""Dense autoencoder trained on benign rows; reconstruction error is the anomaly score.

Layers 18 -> 16 -> 8 -> 16 -> 18 with ReLU on the hidden layers and a
linear output. Training minimizes the mean squared error with minibatch
Adam. The decision threshold is the 95th percentile (linear interpolation)
of the per-row error on the benign training rows.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np


def init_params(widths: list[int], rng: np.random.Generator) -> list[np.ndarray]:
    """[W1, b1, W2, b2, ...]; every entry uniform in +-1/sqrt(fan_in)."""
    params = []
    for fan_in, fan_out in zip(widths, widths[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        params.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        params.append(rng.uniform(-bound, bound, size=fan_out))
    return params


def forward(params: list[np.ndarray], X: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
    """Returns output and the per-layer activations (input first) for backprop."""
    acts = [X]
    h = X
    n_layers = len(params) // 2
    for i in range(n_layers):
        z = h @ params[2 * i] + params[2 * i + 1]
        h = np.maximum(z, 0.0) if i < n_layers - 1 else z
        acts.append(h)
    return h, acts


def loss_and_grads(params: list[np.ndarray], X: np.ndarray) -> tuple[float, list[np.ndarray]]:
    """Mean over rows and dims of the squared residual, and its exact gradient."""
    out, acts = forward(params, X)
    residual = out - X
    loss = float(np.mean(residual**2))
    delta = 2.0 * residual / residual.size
    grads: list[np.ndarray] = [np.empty(0)] * len(params)
    n_layers = len(params) // 2
    for i in reversed(range(n_layers)):
        grads[2 * i] = acts[i].T @ delta
        grads[2 * i + 1] = delta.sum(axis=0)
        if i:
            delta = (delta @ params[2 * i].T) * (acts[i] > 0)
    return loss, grads


class Adam:
    def __init__(self, params: list[np.ndarray], lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


@dataclass
class AutoencoderModel:
    widths: list[int]
    params: list[np.ndarray]
    threshold: float = float("inf")
    loss_history: list[float] = field(default_factory=list)
    adam_state: dict[str, Any] = field(default_factory=dict)

    def reconstruct(self, X) -> np.ndarray:
        return forward(self.params, np.atleast_2d(np.asarray(X, dtype=float)))[0]

    def score(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.mean((self.reconstruct(X) - X) ** 2, axis=1)

    def predict(self, X) -> np.ndarray:
        return (self.score(X) >= self.threshold).astype(int)

    def to_dict(self) -> dict[str, Any]:
        return {
            "format": "autoencoder",
            "version": 1,
            "widths": list(self.widths),
            "threshold": self.threshold,
            "params": [p.tolist() for p in self.params],
            "loss_history": list(self.loss_history),
            "adam_state": self.adam_state,
        }

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> "AutoencoderModel":
        return cls(
            widths=list(raw["widths"]),
            params=[np.asarray(p, dtype=float) for p in raw["params"]],
            threshold=float(raw["threshold"]),
            loss_history=list(raw.get("loss_history", [])),
            adam_state=dict(raw.get("adam_state", {})),
        )


def train_autoencoder(
    benign_rows,
    rng: np.random.Generator,
    hidden: tuple[int, ...] = (16, 8, 16),
    epochs: int = 80,
    batch_size: int = 64,
    learning_rate: float = 1e-3,
    beta1: float = 0.9,
    beta2: float = 0.999,
    epsilon: float = 1e-8,
    threshold_percentile: float = 95.0,
) -> AutoencoderModel:
    X = np.asarray(benign_rows, dtype=float)
    if X.ndim != 2 or len(X) == 0:
        raise ValueError("autoencoder needs a non-empty 2-D matrix of benign rows")
    d = X.shape[1]
    widths = [d, *hidden, d]
    params = init_params(widths, rng)
    opt = Adam(params, learning_rate, beta1, beta2, epsilon)
    history = []
    for _ in range(epochs):
        order = rng.permutation(len(X))
        for start in range(0, len(X), batch_size):
            batch = X[order[start : start + batch_size]]
            _, grads = loss_and_grads(params, batch)
            opt.step(params, grads)
        history.append(float(np.mean((forward(params, X)[0] - X) ** 2)))
    model = AutoencoderModel(
        widths=widths,
        params=params,
        loss_history=history,
        adam_state={
            "t": opt.t,
            "lr": learning_rate,
            "beta1": beta1,
            "beta2": beta2,
            "epsilon": epsilon,
            "m": [m.tolist() for m in opt.m],
            "v": [v.tolist() for v in opt.v],
        },
    )
    model.threshold = float(np.percentile(model.score(X), threshold_percentile))
    return model


def ae_score(model: AutoencoderModel, row) -> float | np.ndarray:
    arr = np.asarray(row, dtype=float)
    scores = model.score(arr)
    return float(scores[0]) if arr.ndim == 1 else scores
