"""Desk-scale benchmarks: scheduler straggler times and kernel backends."""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from fedsim.core import LocalTrainParams
from fedsim.engine import (
    compute_base_weight,
    max_straggler_time,
    round_robin_schedule,
    schedule_users,
)
from fedsim.feddata import make_synthetic_classification
from fedsim.models import MLP, LogisticRegression, available_backends, local_train_sgd

SCHEDULE_POLICIES = ("no_scheduling", "greedy", "greedy_median")


def _policy_straggler(weights: dict[str, float], num_workers: int, overhead: float):
    """Mean worker-duration spread under each policy, one cohort."""
    assignments = {
        "no_scheduling": round_robin_schedule(weights, num_workers),
        "greedy": schedule_users(weights, num_workers, base=0.0),
        "greedy_median": schedule_users(weights, num_workers, base=overhead),
    }
    out = {}
    for policy, assignment in assignments.items():
        durations = [
            sum(weights[uid] + overhead for uid in queue)
            for queue in assignment.queues
        ]
        out[policy] = max_straggler_time(durations)
    return out


def bench_schedule(
    num_users: int = 40,
    worker_counts: Sequence[int] = (1, 2, 4, 10),
    trials: int = 100,
    seed: int = 0,
    lognormal_mean: float = 3.0,
    lognormal_sigma: float = 1.0,
) -> tuple[list[str], list[list[float]]]:
    """Mean max straggler time per (worker count, policy).

    Per-user duration is its datapoint weight plus a constant overhead
    set to the cohort's median weight; the greedy_median policy feeds
    that same overhead to the scheduler as the base weight.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    header = ["num_workers", *SCHEDULE_POLICIES]
    rng = np.random.default_rng(seed)
    cohorts = []
    for _ in range(trials):
        raw = rng.lognormal(mean=lognormal_mean, sigma=lognormal_sigma, size=num_users)
        cohorts.append(
            {f"u{i:04d}": float(max(1.0, round(w))) for i, w in enumerate(raw)}
        )
    rows = []
    for m in worker_counts:
        totals = dict.fromkeys(SCHEDULE_POLICIES, 0.0)
        for weights in cohorts:
            overhead = compute_base_weight(list(weights.values()), "median")
            stragglers = _policy_straggler(weights, m, overhead)
            for policy in SCHEDULE_POLICIES:
                totals[policy] += stragglers[policy]
        rows.append([float(m), *[totals[p] / trials for p in SCHEDULE_POLICIES]])
    return header, rows


@dataclass(frozen=True)
class KernelTiming:
    backend: str
    model: str
    seconds_per_fit: float


def bench_kernels(
    num_points: int = 50,
    dim: int = 32,
    num_classes: int = 10,
    hidden_units: int = 64,
    batch_size: int = 10,
    num_epochs: int = 5,
    repeats: int = 30,
    seed: int = 0,
) -> list[KernelTiming]:
    """Time one user's local fit on every available backend."""
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    X, y = make_synthetic_classification(
        num_points, dim=dim, num_classes=num_classes, margin=2.0, seed=seed
    )
    local = LocalTrainParams(0.1, num_epochs, batch_size)
    models = {
        "logistic": LogisticRegression(dim=dim, num_classes=num_classes),
        "mlp": MLP(dim=dim, hidden_units=hidden_units, num_classes=num_classes),
    }
    timings = []
    for backend in available_backends():
        for name, model in models.items():
            params = model.init_params(seed)
            # warm up so numba compilation is not measured
            local_train_sgd(model, params, X, y, local, seed, backend=backend)
            started = time.perf_counter()
            for r in range(repeats):
                local_train_sgd(model, params, X, y, local, seed + r, backend=backend)
            elapsed = (time.perf_counter() - started) / repeats
            timings.append(
                KernelTiming(backend=backend, model=name, seconds_per_fit=elapsed)
            )
    return timings
