"""Metric values as suffix-summable sufficient statistics.

Two aggregation semantics are supported. A ``CENTRAL`` metric pools
numerators and denominators across users before dividing, e.g. overall
accuracy = total correct / total examples. A ``PER_USER`` metric first
reduces each user to a single ratio and then averages those ratios with
equal weight, so small users count as much as large ones. Both reduce
to summing a (numerator, denominator) pair.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from fedsim.errors import EmptyCohort, IncompatibleShapes


class MetricKind(enum.Enum):
    CENTRAL = "central"
    PER_USER = "per_user"


@dataclass(frozen=True)
class MetricValue:
    """Partially aggregated metric: a summable (numerator, denominator)."""

    kind: MetricKind
    numerator: float
    denominator: float

    def __post_init__(self) -> None:
        if not (np.isfinite(self.numerator) and np.isfinite(self.denominator)):
            raise ValueError("metric components must be finite")
        if self.denominator < 0.0:
            raise ValueError("metric denominator must be >= 0")

    @classmethod
    def from_user(
        cls, kind: MetricKind, numerator: float, denominator: float
    ) -> "MetricValue":
        """Sufficient statistics for a single user's (num, den) pair.

        For ``PER_USER`` the user is collapsed to one ratio with weight 1
        immediately, so later summation averages ratios across users.
        """
        if denominator <= 0.0:
            raise ValueError("a user's metric denominator must be > 0")
        if kind is MetricKind.PER_USER:
            return cls(kind, numerator / denominator, 1.0)
        return cls(kind, float(numerator), float(denominator))

    def __add__(self, other: "MetricValue") -> "MetricValue":
        if self.kind is not other.kind:
            raise IncompatibleShapes(
                f"cannot merge {self.kind.value} with {other.kind.value} metric"
            )
        return MetricValue(
            self.kind,
            self.numerator + other.numerator,
            self.denominator + other.denominator,
        )

    @property
    def value(self) -> float:
        if self.denominator == 0.0:
            raise ZeroDivisionError("metric has zero denominator")
        return self.numerator / self.denominator


def metric_aggregate(values: Iterable[MetricValue]) -> float:
    """Reduce per-user metric values to the final scalar."""
    values = list(values)
    if not values:
        raise EmptyCohort("cannot aggregate metrics over zero users")
    total = values[0]
    for v in values[1:]:
        total = total + v
    return total.value


Metrics = Mapping[str, MetricValue]


def merge_metrics(a: dict[str, MetricValue], b: Metrics) -> dict[str, MetricValue]:
    """Merge ``b`` into a copy of ``a``, summing values under equal names."""
    out = dict(a)
    for name, val in b.items():
        out[name] = out[name] + val if name in out else val
    return out
