"""Built-in differentiable models and local SGD training.

Batch losses are means over the batch, so a single full-batch local
step equals one step of pooled gradient descent, which is what makes
single-epoch full-participation federated averaging coincide with
centralized training.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from fedsim.core import LocalTrainParams, make_rng
from fedsim.models.kernels import get_kernels
from fedsim.models.params import ModelParams, clone_params


class Model:
    """Parameter layout, batch gradient, and local fitting for one architecture.

    Subclasses must provide ``param_dims``, ``init_params``,
    ``loss_and_grad`` and ``eval_counts``. ``fit_local`` has a generic
    gradient-driven implementation; the built-in models override it
    with a compiled kernel that follows the identical update rule:

        theta <- theta - lr * (grad + prox_mu * (theta - anchor) + control)

    visiting batches in the order given by ``perms`` and keeping the
    final partial batch.
    """

    param_dims: dict[str, int]

    def init_params(self, seed: int) -> ModelParams:
        raise NotImplementedError

    def loss_and_grad(
        self, params: Mapping[str, np.ndarray], X: np.ndarray, y: np.ndarray
    ) -> tuple[float, dict[str, np.ndarray]]:
        """Mean loss over the batch and its gradient, flat per entry."""
        raise NotImplementedError

    def eval_counts(
        self, params: Mapping[str, np.ndarray], X: np.ndarray, y: np.ndarray,
        backend: str | None = None,
    ) -> tuple[float, int]:
        """Summed loss and number of correct predictions."""
        raise NotImplementedError

    def fit_local(
        self,
        params: Mapping[str, np.ndarray],
        X: np.ndarray,
        y: np.ndarray,
        perms: np.ndarray,
        learning_rate: float,
        batch_size: int,
        prox_mu: float = 0.0,
        anchor: Mapping[str, np.ndarray] | None = None,
        control: Mapping[str, np.ndarray] | None = None,
        backend: str | None = None,
    ) -> ModelParams:
        p = clone_params(params)
        num_epochs, n = perms.shape
        for e in range(num_epochs):
            for start in range(0, n, batch_size):
                idx = perms[e, start : start + batch_size]
                _, grads = self.loss_and_grad(p, X[idx], y[idx])
                for name in p:
                    step = grads[name]
                    if prox_mu != 0.0:
                        step = step + prox_mu * (p[name] - anchor[name])
                    if control is not None:
                        step = step + control[name]
                    p[name] = p[name] - learning_rate * step
        return p


def _zeros_or(mapping: Mapping[str, np.ndarray] | None, name: str, like: np.ndarray):
    if mapping is None:
        return np.zeros_like(like)
    return mapping[name].reshape(like.shape)


@dataclass(frozen=True)
class LogisticRegression(Model):
    """Multinomial logistic regression with zero initialization."""

    dim: int
    num_classes: int

    @property
    def param_dims(self) -> dict[str, int]:
        return {"weights": self.dim * self.num_classes, "bias": self.num_classes}

    def init_params(self, seed: int) -> ModelParams:
        return {name: np.zeros(n) for name, n in self.param_dims.items()}

    def _views(self, params: Mapping[str, np.ndarray]):
        return (
            params["weights"].reshape(self.dim, self.num_classes),
            params["bias"],
        )

    def loss_and_grad(self, params, X, y):
        W, b = self._views(params)
        n = X.shape[0]
        logits = X @ W + b
        logits = logits - logits.max(axis=1, keepdims=True)
        p = np.exp(logits)
        p /= p.sum(axis=1, keepdims=True)
        loss = -np.mean(np.log(p[np.arange(n), y]))
        dl = p
        dl[np.arange(n), y] -= 1.0
        dl /= n
        return float(loss), {
            "weights": (X.T @ dl).ravel(),
            "bias": dl.sum(axis=0),
        }

    def eval_counts(self, params, X, y, backend=None):
        W, b = self._views(params)
        loss_sum, correct = get_kernels(backend).logistic_eval(W, b, X, y)
        return float(loss_sum), int(correct)

    def fit_local(
        self, params, X, y, perms, learning_rate, batch_size,
        prox_mu=0.0, anchor=None, control=None, backend=None,
    ) -> ModelParams:
        p = clone_params(params)
        W, b = self._views(p)
        aW = _zeros_or(anchor, "weights", W)
        ab = _zeros_or(anchor, "bias", b)
        cW = _zeros_or(control, "weights", W)
        cb = _zeros_or(control, "bias", b)
        get_kernels(backend).logistic_fit(
            W, b, X, y, perms, batch_size, learning_rate, prox_mu, aW, ab, cW, cb
        )
        return p


@dataclass(frozen=True)
class MLP(Model):
    """One-hidden-layer ReLU network, uniform(+-1/sqrt(fan_in)) init."""

    dim: int
    hidden_units: int
    num_classes: int

    @property
    def param_dims(self) -> dict[str, int]:
        return {
            "layer1/weights": self.dim * self.hidden_units,
            "layer1/bias": self.hidden_units,
            "layer2/weights": self.hidden_units * self.num_classes,
            "layer2/bias": self.num_classes,
        }

    def init_params(self, seed: int) -> ModelParams:
        rng = make_rng(seed)
        bound1 = 1.0 / np.sqrt(self.dim)
        bound2 = 1.0 / np.sqrt(self.hidden_units)
        return {
            "layer1/weights": rng.uniform(
                -bound1, bound1, self.dim * self.hidden_units
            ),
            "layer1/bias": rng.uniform(-bound1, bound1, self.hidden_units),
            "layer2/weights": rng.uniform(
                -bound2, bound2, self.hidden_units * self.num_classes
            ),
            "layer2/bias": rng.uniform(-bound2, bound2, self.num_classes),
        }

    def _views(self, params: Mapping[str, np.ndarray]):
        return (
            params["layer1/weights"].reshape(self.dim, self.hidden_units),
            params["layer1/bias"],
            params["layer2/weights"].reshape(self.hidden_units, self.num_classes),
            params["layer2/bias"],
        )

    def loss_and_grad(self, params, X, y):
        W1, b1, W2, b2 = self._views(params)
        n = X.shape[0]
        z1 = X @ W1 + b1
        h = np.maximum(z1, 0.0)
        logits = h @ W2 + b2
        logits = logits - logits.max(axis=1, keepdims=True)
        p = np.exp(logits)
        p /= p.sum(axis=1, keepdims=True)
        loss = -np.mean(np.log(p[np.arange(n), y]))
        dl = p
        dl[np.arange(n), y] -= 1.0
        dl /= n
        dh = dl @ W2.T
        dz1 = dh * (z1 > 0.0)
        return float(loss), {
            "layer1/weights": (X.T @ dz1).ravel(),
            "layer1/bias": dz1.sum(axis=0),
            "layer2/weights": (h.T @ dl).ravel(),
            "layer2/bias": dl.sum(axis=0),
        }

    def eval_counts(self, params, X, y, backend=None):
        W1, b1, W2, b2 = self._views(params)
        loss_sum, correct = get_kernels(backend).mlp_eval(W1, b1, W2, b2, X, y)
        return float(loss_sum), int(correct)

    def fit_local(
        self, params, X, y, perms, learning_rate, batch_size,
        prox_mu=0.0, anchor=None, control=None, backend=None,
    ) -> ModelParams:
        p = clone_params(params)
        W1, b1, W2, b2 = self._views(p)
        args = []
        for src in (anchor, control):
            for name, like in (
                ("layer1/weights", W1), ("layer1/bias", b1),
                ("layer2/weights", W2), ("layer2/bias", b2),
            ):
                args.append(_zeros_or(src, name, like))
        get_kernels(backend).mlp_fit(
            W1, b1, W2, b2, X, y, perms, batch_size, learning_rate, prox_mu, *args
        )
        return p


def local_train_sgd(
    model: Model,
    params: Mapping[str, np.ndarray],
    X: np.ndarray,
    y: np.ndarray,
    local_params: LocalTrainParams,
    seed: int,
    prox_mu: float = 0.0,
    prox_anchor: Mapping[str, np.ndarray] | None = None,
    control: Mapping[str, np.ndarray] | None = None,
    backend: str | None = None,
) -> ModelParams:
    """Run seeded local SGD and return the fitted parameters.

    Epoch shuffles come from the given seed only, so the result is
    reproducible regardless of where or when the user is simulated.
    Zero epochs is a no-op returning an unchanged copy.
    """
    n = X.shape[0]
    if local_params.num_epochs == 0 or n == 0:
        return clone_params(params)
    rng = make_rng(seed)
    perms = np.stack(
        [rng.permutation(n) for _ in range(local_params.num_epochs)]
    ).astype(np.int64)
    return model.fit_local(
        params, X, y, perms,
        learning_rate=local_params.learning_rate,
        batch_size=local_params.batch_size,
        prox_mu=prox_mu,
        anchor=prox_anchor,
        control=control,
        backend=backend,
    )


def count_local_steps(num_points: int, local_params: LocalTrainParams) -> int:
    """Number of optimizer steps ``fit_local`` takes on this many points."""
    if num_points == 0:
        return 0
    batches = -(-num_points // local_params.batch_size)
    return local_params.num_epochs * batches


def evaluate_model(
    model: Model,
    params: Mapping[str, np.ndarray],
    X: np.ndarray,
    y: np.ndarray,
    batch_size: int = 0,
    backend: str | None = None,
) -> tuple[float, int, int]:
    """(summed loss, correct count, total count) over the dataset."""
    n = X.shape[0]
    if batch_size <= 0:
        batch_size = max(n, 1)
    loss_sum = 0.0
    correct = 0
    for start in range(0, n, batch_size):
        ls, c = model.eval_counts(
            params, X[start : start + batch_size], y[start : start + batch_size],
            backend=backend,
        )
        loss_sum += ls
        correct += c
    return loss_sum, correct, n
