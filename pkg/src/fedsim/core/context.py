"""Immutable per-iteration instructions broadcast to simulated devices."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Mapping


class Population(enum.Enum):
    TRAIN = "train"
    VAL = "val"


@dataclass(frozen=True)
class LocalTrainParams:
    """Local SGD settings for one training context."""

    learning_rate: float
    num_epochs: int
    batch_size: int

    def __post_init__(self) -> None:
        if self.learning_rate < 0.0:
            raise ValueError("learning_rate must be >= 0")
        if self.num_epochs < 0:
            raise ValueError("num_epochs must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


@dataclass(frozen=True)
class EvalParams:
    """Evaluation settings; batch_size 0 means one full-dataset batch."""

    batch_size: int = 0


@dataclass(frozen=True)
class CentralContext:
    """Everything a device needs for one unit of work at iteration ``t``.

    ``algo_params`` carries algorithm-specific scalars already resolved
    for this iteration (schedules are evaluated when the context is
    built, so every user in the cohort sees identical values).
    """

    iteration: int
    population: Population
    cohort_size: int
    seed: int
    do_training: bool
    local_params: LocalTrainParams | None = None
    eval_params: EvalParams = field(default_factory=EvalParams)
    algo_params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.do_training != (self.local_params is not None):
            raise ValueError(
                "local_params must be present exactly when do_training is set"
            )
        if self.cohort_size < 1:
            raise ValueError("cohort_size must be >= 1")
        if self.iteration < 0:
            raise ValueError("iteration must be >= 0")
