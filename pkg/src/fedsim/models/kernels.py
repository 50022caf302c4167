"""Hot per-user training and evaluation kernels.

Each kernel exists in two interchangeable backends built from the same
source: a numba ``@njit`` compilation and the plain-numpy function
itself. The active default is chosen by the ``FEDSIM_BACKEND``
environment variable (``auto`` | ``numba`` | ``numpy``; auto prefers
numba when importable). Both backends can also be requested explicitly
in one process, which is how the built-in benchmark compares them.

Kernels mutate their parameter arrays in place; callers pass copies.
``fastmath`` stays off so results are reproducible and match the numpy
backend within ordinary rounding.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from typing import Callable

import numpy as np

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    njit = None
    HAS_NUMBA = False

logger = logging.getLogger(__name__)

_NJIT_OPTIONS = {"cache": True, "nogil": True}
ENV_VAR = "FEDSIM_BACKEND"


def _logistic_fit(W, b, X, y, perms, batch_size, lr, prox_mu, aW, ab, cW, cb):
    """Mini-batch SGD on softmax cross-entropy for a linear model.

    W is (dim, classes). The gradient of the mean batch loss is
    augmented with a proximal pull toward (aW, ab) scaled by prox_mu
    and an additive control correction (cW, cb); both are zero arrays
    when unused, keeping a single code path for every algorithm.
    """
    num_epochs, n = perms.shape
    num_classes = W.shape[1]
    for e in range(num_epochs):
        for start in range(0, n, batch_size):
            idx = perms[e, start : start + batch_size]
            Xb = X[idx]
            nb = Xb.shape[0]
            logits = np.dot(Xb, W) + b
            dl = np.empty_like(logits)
            for i in range(nb):
                row = logits[i]
                m = row.max()
                ex = np.exp(row - m)
                s = ex.sum()
                for k in range(num_classes):
                    dl[i, k] = ex[k] / s
                dl[i, y[idx[i]]] -= 1.0
            dl /= nb
            gW = np.dot(np.ascontiguousarray(Xb.T), dl)
            gb = dl.sum(axis=0)
            W -= lr * (gW + prox_mu * (W - aW) + cW)
            b -= lr * (gb + prox_mu * (b - ab) + cb)


def _logistic_eval(W, b, X, y):
    """Summed cross-entropy loss and correct-prediction count."""
    logits = np.dot(X, W) + b
    n = X.shape[0]
    loss_sum = 0.0
    correct = 0
    for i in range(n):
        row = logits[i]
        m = row.max()
        ex = np.exp(row - m)
        loss_sum += -(row[y[i]] - m - np.log(ex.sum()))
        if np.argmax(row) == y[i]:
            correct += 1
    return loss_sum, correct


def _mlp_fit(
    W1, b1, W2, b2, X, y, perms, batch_size, lr, prox_mu,
    aW1, ab1, aW2, ab2, cW1, cb1, cW2, cb2,
):
    """Mini-batch SGD for a one-hidden-layer ReLU network."""
    num_epochs, n = perms.shape
    num_classes = W2.shape[1]
    for e in range(num_epochs):
        for start in range(0, n, batch_size):
            idx = perms[e, start : start + batch_size]
            Xb = X[idx]
            nb = Xb.shape[0]
            z1 = np.dot(Xb, W1) + b1
            h = np.maximum(z1, 0.0)
            logits = np.dot(h, W2) + b2
            dl = np.empty_like(logits)
            for i in range(nb):
                row = logits[i]
                m = row.max()
                ex = np.exp(row - m)
                s = ex.sum()
                for k in range(num_classes):
                    dl[i, k] = ex[k] / s
                dl[i, y[idx[i]]] -= 1.0
            dl /= nb
            gW2 = np.dot(np.ascontiguousarray(h.T), dl)
            gb2 = dl.sum(axis=0)
            dh = np.dot(dl, np.ascontiguousarray(W2.T))
            dz1 = dh * np.where(z1 > 0.0, 1.0, 0.0)
            gW1 = np.dot(np.ascontiguousarray(Xb.T), dz1)
            gb1 = dz1.sum(axis=0)
            W1 -= lr * (gW1 + prox_mu * (W1 - aW1) + cW1)
            b1 -= lr * (gb1 + prox_mu * (b1 - ab1) + cb1)
            W2 -= lr * (gW2 + prox_mu * (W2 - aW2) + cW2)
            b2 -= lr * (gb2 + prox_mu * (b2 - ab2) + cb2)


def _mlp_eval(W1, b1, W2, b2, X, y):
    h = np.maximum(np.dot(X, W1) + b1, 0.0)
    logits = np.dot(h, W2) + b2
    n = X.shape[0]
    loss_sum = 0.0
    correct = 0
    for i in range(n):
        row = logits[i]
        m = row.max()
        ex = np.exp(row - m)
        loss_sum += -(row[y[i]] - m - np.log(ex.sum()))
        if np.argmax(row) == y[i]:
            correct += 1
    return loss_sum, correct


_IMPLS = {
    "logistic_fit": _logistic_fit,
    "logistic_eval": _logistic_eval,
    "mlp_fit": _mlp_fit,
    "mlp_eval": _mlp_eval,
}


@dataclass(frozen=True)
class KernelSet:
    name: str
    logistic_fit: Callable
    logistic_eval: Callable
    mlp_fit: Callable
    mlp_eval: Callable


_CACHE: dict[str, KernelSet] = {}


def available_backends() -> tuple[str, ...]:
    return ("numpy", "numba") if HAS_NUMBA else ("numpy",)


def default_backend() -> str:
    """Resolve the FEDSIM_BACKEND environment flag."""
    choice = os.environ.get(ENV_VAR, "auto").lower()
    if choice == "auto":
        return "numba" if HAS_NUMBA else "numpy"
    if choice not in ("numba", "numpy"):
        raise ValueError(f"{ENV_VAR} must be auto, numba or numpy, got {choice!r}")
    if choice == "numba" and not HAS_NUMBA:
        logger.warning("%s=numba but numba is not importable; using numpy", ENV_VAR)
        return "numpy"
    return choice


def get_kernels(backend: str | None = None) -> KernelSet:
    """Kernel set for ``backend`` (default: the environment's choice)."""
    backend = backend or default_backend()
    if backend not in available_backends():
        raise ValueError(f"backend {backend!r} not available")
    if backend not in _CACHE:
        if backend == "numba":
            fns = {name: njit(**_NJIT_OPTIONS)(fn) for name, fn in _IMPLS.items()}
        else:
            fns = dict(_IMPLS)
        _CACHE[backend] = KernelSet(name=backend, **fns)
    return _CACHE[backend]
