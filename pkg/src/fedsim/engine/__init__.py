"""Simulation backend: aggregation, scheduling, worker pool, loop."""

from .aggregator import Aggregator, SumAggregator, worker_reduce_sum
from .loop import CallbackHook, MetricsRow, SimulationResult, run_simulation
from .runtime import IterationResult, SimulationEngine
from .scheduling import (
    BASE_POLICIES,
    WorkerAssignment,
    compute_base_weight,
    max_straggler_time,
    round_robin_schedule,
    schedule_users,
)

__all__ = [
    "Aggregator",
    "SumAggregator",
    "worker_reduce_sum",
    "CallbackHook",
    "MetricsRow",
    "SimulationResult",
    "run_simulation",
    "IterationResult",
    "SimulationEngine",
    "BASE_POLICIES",
    "WorkerAssignment",
    "compute_base_weight",
    "max_straggler_time",
    "round_robin_schedule",
    "schedule_users",
]
