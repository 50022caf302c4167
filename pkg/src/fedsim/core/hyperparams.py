"""Scheduled hyperparameters resolved once per central iteration.

A ``HyperParam`` pairs a base value with a schedule; the resolved float
for iteration ``t`` is a pure function of ``t``, so repeated resolution
is bit-identical and safe to perform anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union


@dataclass(frozen=True)
class Constant:
    def value_at(self, base: float, iteration: int) -> float:
        return base


@dataclass(frozen=True)
class LinearWarmup:
    """Ramp linearly from base/warmup_iterations up to base, then hold."""

    warmup_iterations: int

    def __post_init__(self) -> None:
        if self.warmup_iterations < 1:
            raise ValueError("warmup_iterations must be >= 1")

    def value_at(self, base: float, iteration: int) -> float:
        step = min(iteration + 1, self.warmup_iterations)
        return base * step / self.warmup_iterations


@dataclass(frozen=True)
class PiecewiseConstant:
    """Hold base until the first boundary, then the paired values.

    ``steps`` is a sorted tuple of (start_iteration, value) pairs; the
    value of the last pair whose start is <= t applies.
    """

    steps: tuple[tuple[int, float], ...]

    def __post_init__(self) -> None:
        starts = [s for s, _ in self.steps]
        if starts != sorted(starts):
            raise ValueError("piecewise steps must be sorted by start iteration")

    def value_at(self, base: float, iteration: int) -> float:
        value = base
        for start, v in self.steps:
            if iteration >= start:
                value = v
            else:
                break
        return value


Schedule = Union[Constant, LinearWarmup, PiecewiseConstant]


@dataclass(frozen=True)
class HyperParam:
    base_value: float
    schedule: Schedule = field(default_factory=Constant)

    def value_at(self, iteration: int) -> float:
        return self.schedule.value_at(self.base_value, iteration)


def resolve(value: "float | HyperParam", iteration: int) -> float:
    """Resolve a plain float or a scheduled hyperparameter at ``t``."""
    if isinstance(value, HyperParam):
        return value.value_at(iteration)
    return float(value)
