"""Straggler-minimizing assignment of cohort users to workers.

An iteration is only as fast as its slowest worker, so users are
spread to equalize per-worker durations.  A user's duration is
proxied by its weight (datapoint count) plus a constant per-user
overhead; the ``base`` term models that overhead.  Users are sorted
by effective weight descending and placed greedily on the currently
lightest worker - the LPT rule, whose makespan is within
``4/3 - 1/(3m)`` of optimal.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from fedsim.errors import EmptyCohort

BASE_POLICIES = ("zero", "median", "fixed")


@dataclass(frozen=True)
class WorkerAssignment:
    """Per-worker user queues plus their total effective weights."""

    queues: tuple[tuple[str, ...], ...]
    loads: tuple[float, ...]

    @property
    def num_workers(self) -> int:
        return len(self.queues)


def compute_base_weight(
    weights: Sequence[float], policy: str = "zero", fixed_value: float = 0.0
) -> float:
    """Per-user overhead to add before balancing.

    ``median`` uses the lower median (index ``(n - 1) // 2`` of the
    sorted weights) so the result is always an actual cohort weight.
    """
    if policy == "zero":
        return 0.0
    if policy == "median":
        if not weights:
            raise EmptyCohort("median base weight needs a nonempty cohort")
        ordered = sorted(weights)
        return float(ordered[(len(ordered) - 1) // 2])
    if policy == "fixed":
        return float(fixed_value)
    raise ValueError(f"unknown base policy {policy!r}; expected {BASE_POLICIES}")


def schedule_users(
    user_weights: Mapping[str, float], num_workers: int, base: float = 0.0
) -> WorkerAssignment:
    """Greedy longest-first assignment to the least-loaded worker.

    Ties in effective weight break by user_id ascending, ties in load
    by lowest worker index, so the assignment is fully deterministic.
    """
    if num_workers < 1:
        raise ValueError("num_workers must be >= 1")
    if base < 0:
        raise ValueError("base weight must be >= 0")
    for user_id, weight in user_weights.items():
        if weight <= 0:
            raise ValueError(f"user {user_id!r} has nonpositive weight {weight}")
    order = sorted(user_weights.items(), key=lambda item: (-item[1], item[0]))
    queues: list[list[str]] = [[] for _ in range(num_workers)]
    loads = [0.0] * num_workers
    for user_id, weight in order:
        target = min(range(num_workers), key=loads.__getitem__)
        queues[target].append(user_id)
        loads[target] += weight + base
    return WorkerAssignment(
        queues=tuple(tuple(q) for q in queues), loads=tuple(loads)
    )


def round_robin_schedule(
    user_weights: Mapping[str, float], num_workers: int
) -> WorkerAssignment:
    """Unsorted round-robin baseline: user i goes to worker i mod m."""
    if num_workers < 1:
        raise ValueError("num_workers must be >= 1")
    queues: list[list[str]] = [[] for _ in range(num_workers)]
    loads = [0.0] * num_workers
    for i, (user_id, weight) in enumerate(user_weights.items()):
        target = i % num_workers
        queues[target].append(user_id)
        loads[target] += weight
    return WorkerAssignment(
        queues=tuple(tuple(q) for q in queues), loads=tuple(loads)
    )


def max_straggler_time(per_worker_durations: Sequence[float]) -> float:
    """Wall-clock gap between the first and last worker to finish."""
    if not per_worker_durations:
        raise ValueError("need at least one worker duration")
    return float(max(per_worker_durations) - min(per_worker_durations))
