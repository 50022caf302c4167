"""Weighted named-vector statistics and their aggregation algebra.

A ``Statistics`` value is the unit every simulated user contributes: an
ordered mapping from entry names to flat float64 vectors, plus a
nonnegative scalar weight. Aggregation is entrywise summation of both
vectors and weights, so a weighted mean is recovered by dividing the
accumulated vectors by the accumulated weight. Users that should count
with weight ``w`` submit vectors already multiplied by ``w``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from fedsim.errors import IncompatibleShapes, ZeroWeight


@dataclass(frozen=True)
class Statistics:
    """Named flat vectors with a nonnegative weight.

    Instances are treated as immutable: operations return new objects
    and callers must not modify ``entries`` arrays in place. Use
    :meth:`from_entries` to build validated instances.
    """

    entries: dict[str, np.ndarray]
    weight: float

    @classmethod
    def from_entries(
        cls, entries: Mapping[str, np.ndarray], weight: float
    ) -> "Statistics":
        """Validate and normalize ``entries`` into a new instance.

        Vectors are converted to 1-d float64 arrays. Raises ValueError
        for negative or non-finite weight, non-finite vector values, or
        a zero weight paired with any nonzero vector.
        """
        weight = float(weight)
        if not np.isfinite(weight) or weight < 0.0:
            raise ValueError(f"weight must be finite and >= 0, got {weight}")
        out: dict[str, np.ndarray] = {}
        for name, vec in entries.items():
            arr = np.asarray(vec, dtype=np.float64)
            if arr.ndim != 1:
                raise ValueError(
                    f"entry {name!r} must be a flat vector, got shape {arr.shape}"
                )
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"entry {name!r} contains non-finite values")
            if weight == 0.0 and np.any(arr != 0.0):
                raise ValueError(
                    f"zero-weight statistics must be all zero, entry {name!r} is not"
                )
            out[name] = arr.copy()
        return cls(entries=out, weight=weight)

    @classmethod
    def zeros(cls, dims: Mapping[str, int]) -> "Statistics":
        """All-zero statistics with weight 0 and the given entry lengths."""
        return cls(
            entries={name: np.zeros(int(n)) for name, n in dims.items()},
            weight=0.0,
        )

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(self.entries)

    @property
    def num_dims(self) -> int:
        """Total number of scalar components across all entries."""
        return sum(v.size for v in self.entries.values())

    def get(self, name: str) -> np.ndarray:
        return self.entries[name]


def _check_compatible(a: Statistics, b: Statistics) -> None:
    if set(a.entries) != set(b.entries):
        raise IncompatibleShapes(
            f"entry names differ: {sorted(a.entries)} vs {sorted(b.entries)}"
        )
    for name, vec in a.entries.items():
        other = b.entries[name]
        if vec.shape != other.shape:
            raise IncompatibleShapes(
                f"entry {name!r} length differs: {vec.size} vs {other.size}"
            )


def accumulate(a: Statistics, b: Statistics) -> Statistics:
    """Entrywise sum of vectors and weights. Keeps ``a``'s entry order."""
    _check_compatible(a, b)
    return Statistics(
        entries={name: vec + b.entries[name] for name, vec in a.entries.items()},
        weight=a.weight + b.weight,
    )


def average(stats: Statistics) -> Statistics:
    """Divide every vector by the total weight; result has weight 1."""
    if stats.weight == 0.0:
        raise ZeroWeight("cannot average statistics with zero total weight")
    inv = 1.0 / stats.weight
    return Statistics(
        entries={name: vec * inv for name, vec in stats.entries.items()},
        weight=1.0,
    )


def scale_entries(stats: Statistics, factor: float) -> Statistics:
    """Multiply every vector by ``factor``; the weight is unchanged."""
    return Statistics(
        entries={name: vec * factor for name, vec in stats.entries.items()},
        weight=stats.weight,
    )


def weighted(entries: Mapping[str, np.ndarray], weight: float) -> Statistics:
    """Statistics for one user: vectors premultiplied by ``weight``.

    With this convention ``average(accumulate(...))`` over a cohort
    yields the weighted mean of the raw per-user vectors.
    """
    if weight < 0.0 or not np.isfinite(weight):
        raise ValueError(f"weight must be finite and >= 0, got {weight}")
    scaled = {
        name: np.asarray(vec, dtype=np.float64) * weight
        for name, vec in entries.items()
    }
    return Statistics.from_entries(scaled, weight)


def global_norm(
    stats: Statistics, order: float = 2.0, names: Iterable[str] | None = None
) -> float:
    """Norm of the concatenation of the selected entries (default: all)."""
    selected = stats.names if names is None else tuple(names)
    if not selected:
        return 0.0
    flat = np.concatenate([stats.entries[name] for name in selected])
    return float(np.linalg.norm(flat, ord=order))
