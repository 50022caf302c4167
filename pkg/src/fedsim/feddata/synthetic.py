"""Synthetic Gaussian-cluster classification data."""

from __future__ import annotations

import numpy as np

from fedsim.core import make_rng


def make_synthetic_classification(
    num_points: int,
    dim: int,
    num_classes: int,
    margin: float,
    seed: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Sample points around class centers with unit isotropic noise.

    Centers are drawn from a standard Gaussian and rescaled so the
    minimum pairwise center distance equals ``margin``. Labels are
    balanced to within one point and the row order is shuffled.
    Returns ``(features, labels)``; ``num_points == 0`` yields empty
    arrays.
    """
    if dim < 1 or num_classes < 1:
        raise ValueError("dim and num_classes must be >= 1")
    if margin <= 0.0:
        raise ValueError("margin must be > 0")
    rng = make_rng(seed)
    if num_points == 0:
        return np.zeros((0, dim)), np.zeros(0, dtype=np.int64)

    centers = rng.normal(size=(num_classes, dim))
    if num_classes > 1:
        diffs = centers[:, None, :] - centers[None, :, :]
        dist = np.sqrt((diffs**2).sum(axis=2))
        min_dist = dist[np.triu_indices(num_classes, k=1)].min()
        while min_dist < 1e-9:  # essentially impossible, but stay safe
            centers = rng.normal(size=(num_classes, dim))
            diffs = centers[:, None, :] - centers[None, :, :]
            dist = np.sqrt((diffs**2).sum(axis=2))
            min_dist = dist[np.triu_indices(num_classes, k=1)].min()
        centers *= margin / min_dist

    base, extra = divmod(num_points, num_classes)
    counts = np.full(num_classes, base)
    counts[:extra] += 1
    labels = np.repeat(np.arange(num_classes, dtype=np.int64), counts)
    labels = labels[rng.permutation(num_points)]
    features = centers[labels] + rng.normal(size=(num_points, dim))
    return features, labels
