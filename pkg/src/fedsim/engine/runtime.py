"""One central iteration: sample, schedule, simulate, reduce, postprocess.

Workers are in-process threads.  Each worker owns a private partial
accumulator and a private queue of users; nothing mutable is shared,
so the only synchronization point is the reduce after all queues
drain.  Per-user seeds derive from the context seed and user id alone,
which makes results independent of how users land on workers.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

from fedsim.algorithms import AlgorithmState, FederatedAlgorithm
from fedsim.core import CentralContext, MetricValue, Population, Statistics, merge_metrics, user_seed
from fedsim.errors import EngineError
from fedsim.feddata import FederatedDataset, sample_cohort
from fedsim.privacy import validate_pipeline

from .aggregator import Aggregator, SumAggregator
from .scheduling import compute_base_weight, schedule_users


@dataclass
class IterationResult:
    """Everything one call to run_iteration hands back for processing."""

    aggregates: tuple[Statistics | None, ...]
    metrics: dict[tuple[str, str], MetricValue]
    user_updates: list[tuple[str, Any]] = field(default_factory=list)
    cohorts: tuple[tuple[str, tuple[str, ...]], ...] = ()


class SimulationEngine:
    """Runs central iterations over a fixed worker pool.

    The engine holds no algorithm state of its own; it is safe to run
    several engines concurrently in one process.
    """

    def __init__(
        self,
        datasets: Mapping[Population, FederatedDataset],
        *,
        num_workers: int = 1,
        postprocessors: Sequence = (),
        aggregator: Aggregator | None = None,
        base_policy: str = "median",
        base_value: float = 0.0,
        cohort_mode: str = "fixed",
        poisson_rate: float | None = None,
    ):
        if num_workers < 1:
            raise ValueError("num_workers must be >= 1")
        validate_pipeline(postprocessors)
        self._datasets = dict(datasets)
        self._num_workers = int(num_workers)
        self._postprocessors = tuple(postprocessors)
        self._aggregator = aggregator if aggregator is not None else SumAggregator()
        self._base_policy = base_policy
        self._base_value = float(base_value)
        self._cohort_mode = cohort_mode
        self._poisson_rate = poisson_rate

    @property
    def num_workers(self) -> int:
        return self._num_workers

    @property
    def postprocessors(self) -> tuple:
        return self._postprocessors

    def run_iteration(
        self,
        algorithm: FederatedAlgorithm,
        state: AlgorithmState,
        contexts: Sequence[CentralContext],
    ) -> IterationResult:
        aggregates: list[Statistics | None] = []
        metrics: dict[tuple[str, str], MetricValue] = {}
        user_updates: list[tuple[str, Any]] = []
        cohorts: list[tuple[str, tuple[str, ...]]] = []
        for context in contexts:
            aggregate, ctx_metrics, ctx_updates, cohort = self._run_context(
                algorithm, state, context
            )
            aggregates.append(aggregate)
            population = context.population.value
            for name, value in ctx_metrics.items():
                key = (population, name)
                if key in metrics:
                    metrics[key] = metrics[key] + value
                else:
                    metrics[key] = value
            user_updates.extend(ctx_updates)
            cohorts.append((population, cohort))
        return IterationResult(
            aggregates=tuple(aggregates),
            metrics=metrics,
            user_updates=user_updates,
            cohorts=tuple(cohorts),
        )

    def _run_context(
        self,
        algorithm: FederatedAlgorithm,
        state: AlgorithmState,
        context: CentralContext,
    ) -> tuple[Statistics | None, dict[str, MetricValue], list, tuple[str, ...]]:
        population = context.population
        dataset = self._datasets.get(population)
        if dataset is None:
            raise EngineError(
                f"iteration {context.iteration}: no dataset for "
                f"population {population.value!r}"
            )
        cohort = sample_cohort(
            dataset,
            context.cohort_size,
            context.seed,
            mode=self._cohort_mode,
            poisson_rate=self._poisson_rate,
        )
        if not cohort:
            return None, {}, [], cohort
        weights = {uid: float(dataset.users[uid].weight) for uid in cohort}
        base = compute_base_weight(
            list(weights.values()), self._base_policy, self._base_value
        )
        assignment = schedule_users(weights, self._num_workers, base)

        if self._num_workers == 1:
            outcomes = [
                self._run_queue(algorithm, state, dataset, context, assignment.queues[0])
            ]
        else:
            with ThreadPoolExecutor(max_workers=self._num_workers) as pool:
                futures = [
                    pool.submit(
                        self._run_queue, algorithm, state, dataset, context, queue
                    )
                    for queue in assignment.queues
                ]
                # worker-index order keeps the reduce deterministic
                outcomes = [future.result() for future in futures]

        aggregate = self._aggregator.worker_reduce([out[0] for out in outcomes])
        ctx_metrics: dict[str, MetricValue] = {}
        ctx_updates: list = []
        for _, worker_metrics, worker_updates in outcomes:
            ctx_metrics = merge_metrics(ctx_metrics, worker_metrics)
            ctx_updates.extend(worker_updates)

        if aggregate is not None:
            # server side runs the declared pipeline in reversed order,
            # e.g. [clip, noise] locally becomes [noise, clip] here
            for processor in reversed(self._postprocessors):
                try:
                    aggregate, server_metrics = processor.postprocess_server(
                        aggregate, context
                    )
                except Exception as exc:
                    raise EngineError(
                        f"iteration {context.iteration}, population "
                        f"{population.value!r}: server postprocessor "
                        f"{type(processor).__name__} failed: {exc}"
                    ) from exc
                ctx_metrics = merge_metrics(ctx_metrics, server_metrics)
        return aggregate, ctx_metrics, ctx_updates, cohort

    def _run_queue(
        self,
        algorithm: FederatedAlgorithm,
        state: AlgorithmState,
        dataset: FederatedDataset,
        context: CentralContext,
        queue: Sequence[str],
    ) -> tuple[Statistics | None, dict[str, MetricValue], list]:
        partial: Statistics | None = None
        queue_metrics: dict[str, MetricValue] = {}
        queue_updates: list = []
        for user_id in queue:
            try:
                result = algorithm.simulate_one_user(
                    state,
                    dataset.users[user_id],
                    context,
                    user_seed(context.seed, user_id),
                )
                stats = result.statistics
                if stats is not None:
                    for processor in self._postprocessors:
                        stats = processor.postprocess_one_user(
                            stats, result.aux, context
                        )
                    partial = self._aggregator.accumulate(partial, stats)
                queue_metrics = merge_metrics(queue_metrics, result.metrics)
                if result.algo_update is not None:
                    queue_updates.append(result.algo_update)
            except EngineError:
                raise
            except Exception as exc:
                raise EngineError(
                    f"iteration {context.iteration}, population "
                    f"{context.population.value!r}, user {user_id!r}: {exc}"
                ) from exc
        return partial, queue_metrics, queue_updates
