"""Central optimizers applied to the averaged model delta."""

from __future__ import annotations

from typing import Mapping

import numpy as np

from fedsim.core import HyperParam, Statistics, resolve
from fedsim.models.params import ModelParams, apply_delta, check_same_structure


class SGDOptimizer:
    def __init__(self, learning_rate: "float | HyperParam"):
        self.learning_rate = learning_rate

    def step(
        self, params: Mapping[str, np.ndarray], direction: Mapping[str, np.ndarray],
        iteration: int,
    ) -> ModelParams:
        return apply_delta(params, direction, resolve(self.learning_rate, iteration))


class AdamOptimizer:
    """Adam with bias correction, treating the averaged delta as gradient.

    ``adaptivity_degree`` is the epsilon added to the root of the
    bias-corrected second moment; large values push behavior toward
    plain SGD, small values make the step scale-free per coordinate.
    """

    def __init__(
        self,
        learning_rate: "float | HyperParam",
        beta1: float = 0.9,
        beta2: float = 0.99,
        adaptivity_degree: float = 0.1,
    ):
        if not 0.0 <= beta1 < 1.0 or not 0.0 <= beta2 < 1.0:
            raise ValueError("betas must be in [0, 1)")
        if adaptivity_degree <= 0.0:
            raise ValueError("adaptivity_degree must be > 0")
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.adaptivity_degree = adaptivity_degree
        self.step_count = 0
        self.first_moment: ModelParams | None = None
        self.second_moment: ModelParams | None = None

    def step(self, params, direction, iteration) -> ModelParams:
        lr = resolve(self.learning_rate, iteration)
        if self.first_moment is None:
            self.first_moment = {n: np.zeros_like(v) for n, v in params.items()}
            self.second_moment = {n: np.zeros_like(v) for n, v in params.items()}
        self.step_count += 1
        t = self.step_count
        out: ModelParams = {}
        for name, theta in params.items():
            g = direction[name]
            m = self.beta1 * self.first_moment[name] + (1 - self.beta1) * g
            v = self.beta2 * self.second_moment[name] + (1 - self.beta2) * g * g
            self.first_moment[name] = m
            self.second_moment[name] = v
            m_hat = m / (1 - self.beta1**t)
            v_hat = v / (1 - self.beta2**t)
            out[name] = theta - lr * m_hat / (np.sqrt(v_hat) + self.adaptivity_degree)
        return out


CentralOptimizer = SGDOptimizer | AdamOptimizer


def central_step(
    optimizer: CentralOptimizer,
    params: Mapping[str, np.ndarray],
    averaged_delta: Statistics,
    iteration: int,
) -> ModelParams:
    """Apply one central update from an already-averaged delta."""
    if averaged_delta.weight != 1.0:
        raise ValueError(
            "central_step expects an averaged delta (weight 1), "
            f"got weight {averaged_delta.weight}"
        )
    check_same_structure(dict(params), averaged_delta.entries)
    return optimizer.step(params, averaged_delta.entries, iteration)
