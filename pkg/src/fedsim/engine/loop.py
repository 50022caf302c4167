"""The outer simulation loop: iterate until the algorithm stops.

Each pass asks the algorithm for the next central contexts (an empty
tuple ends the run), executes them on the engine, folds the aggregates
back into central state, then fires callbacks which may request an
early stop.  Metric rows come out sorted by (population, metric) per
iteration so identical runs serialize to identical byte streams.
"""

from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

from fedsim.algorithms import AlgorithmState, FederatedAlgorithm
from fedsim.models import ModelParams

from .runtime import SimulationEngine

# (iteration, population, metric, value, weight)
MetricsRow = tuple[int, str, str, float, float]

# after_central_iteration(params, rows, t) -> truthy requests a stop;
# callbacks observe, they must not mutate params or rows
CallbackHook = Callable[[ModelParams, Sequence[MetricsRow], int], object]


@dataclass
class SimulationResult:
    """Final state plus everything observed along the way."""

    state: AlgorithmState
    metrics_rows: list[MetricsRow]
    iterations_run: int
    iteration_seconds: list[float] = field(default_factory=list)
    cohort_digest: str = ""

    @property
    def params(self) -> ModelParams:
        return self.state.params


def run_simulation(
    algorithm: FederatedAlgorithm,
    engine: SimulationEngine,
    callbacks: Sequence[CallbackHook] = (),
) -> SimulationResult:
    """Drive the algorithm to completion on the engine."""
    state = algorithm.initial_state()
    rows: list[MetricsRow] = []
    timings: list[float] = []
    digest = hashlib.sha256()
    iterations_run = 0
    t = 0
    while True:
        contexts = algorithm.get_next_central_contexts(state, t)
        if not contexts:
            break
        started = time.perf_counter()
        result = engine.run_iteration(algorithm, state, contexts)
        state = algorithm.process_aggregated_statistics_all_contexts(
            state, contexts, result.aggregates, result.metrics, result.user_updates
        )
        timings.append(time.perf_counter() - started)
        iterations_run = t + 1
        for population, cohort in result.cohorts:
            digest.update(repr((t, population, cohort)).encode())
        iteration_rows: list[MetricsRow] = [
            (t, population, name, value.value, value.denominator)
            for (population, name), value in sorted(result.metrics.items())
        ]
        rows.extend(iteration_rows)
        stop = False
        for callback in callbacks:
            if callback(state.params, tuple(iteration_rows), t):
                stop = True
        if stop:
            break
        t += 1
    return SimulationResult(
        state=state,
        metrics_rows=rows,
        iterations_run=iterations_run,
        iteration_seconds=timings,
        cohort_digest=digest.hexdigest(),
    )
