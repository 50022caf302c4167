"""The three-operation contract every federated algorithm implements.

The simulation loop only ever calls these operations:

1. ``get_next_central_contexts`` - what work should iteration ``t`` do
   (an empty tuple ends the run);
2. ``simulate_one_user`` - pure per-user work given a context;
3. ``process_aggregated_statistics_all_contexts`` - fold the
   aggregated cohort statistics back into central state.

``simulate_one_user`` must not mutate anything reachable from the
state; per-user bookkeeping (e.g. control variates) is returned in
``UserResult.algo_update`` and handed back during processing, which
keeps user simulation safely parallel and order-independent.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Sequence

from fedsim.core import CentralContext, MetricValue, Statistics
from fedsim.feddata import UserDataset
from fedsim.models import CentralOptimizer, ModelParams


@dataclass
class AlgorithmState:
    """Central state threaded through the loop."""

    params: ModelParams
    optimizer: CentralOptimizer
    extra: dict[str, Any] = field(default_factory=dict)


@dataclass
class UserResult:
    """Everything one simulated user hands back to the server."""

    statistics: Statistics | None
    aux: dict[str, float]
    metrics: dict[str, MetricValue]
    algo_update: tuple[str, Any] | None = None


class FederatedAlgorithm:
    def initial_state(self) -> AlgorithmState:
        raise NotImplementedError

    def get_next_central_contexts(
        self, state: AlgorithmState, iteration: int
    ) -> tuple[CentralContext, ...]:
        raise NotImplementedError

    def simulate_one_user(
        self,
        state: AlgorithmState,
        user: UserDataset,
        context: CentralContext,
        seed: int,
    ) -> UserResult:
        raise NotImplementedError

    def process_aggregated_statistics_all_contexts(
        self,
        state: AlgorithmState,
        contexts: Sequence[CentralContext],
        aggregates: Sequence[Statistics | None],
        iteration_metrics: dict[tuple[str, str], MetricValue],
        user_updates: Sequence[tuple[str, Any]],
    ) -> AlgorithmState:
        raise NotImplementedError
