"""Model parameters as named flat vectors.

Parameters share the shape contract of statistics entries (name ->
1-d float64), so model deltas convert directly into aggregable
statistics.
"""

from __future__ import annotations

from typing import Mapping

import numpy as np

from fedsim.core import Statistics, weighted
from fedsim.errors import IncompatibleShapes

ModelParams = dict[str, np.ndarray]


def clone_params(params: Mapping[str, np.ndarray]) -> ModelParams:
    return {name: vec.copy() for name, vec in params.items()}


def check_same_structure(a: Mapping[str, np.ndarray], b: Mapping[str, np.ndarray]) -> None:
    if set(a) != set(b):
        raise IncompatibleShapes(f"names differ: {sorted(a)} vs {sorted(b)}")
    for name, vec in a.items():
        if vec.shape != b[name].shape:
            raise IncompatibleShapes(f"entry {name!r} shape differs")


def model_update_delta(
    before: Mapping[str, np.ndarray],
    after: Mapping[str, np.ndarray],
    weight: float,
) -> Statistics:
    """Statistics carrying ``weight * (before - after)`` per entry.

    The sign convention makes the delta point along the gradient: the
    central optimizer subtracts it.
    """
    check_same_structure(before, after)
    return weighted(
        {name: before[name] - after[name] for name in before}, weight
    )


def apply_delta(
    params: Mapping[str, np.ndarray], direction: Mapping[str, np.ndarray], scale: float
) -> ModelParams:
    """Return ``params - scale * direction`` entrywise."""
    check_same_structure(params, dict(direction))
    return {name: params[name] - scale * direction[name] for name in params}


def params_total_dims(params: Mapping[str, np.ndarray]) -> int:
    return sum(v.size for v in params.values())
