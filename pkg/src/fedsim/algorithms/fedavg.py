"""Federated averaging and its proximal variants."""

from __future__ import annotations

from typing import Any, Sequence

from fedsim.algorithms.base import AlgorithmState, FederatedAlgorithm, UserResult
from fedsim.core import (
    CentralContext,
    EvalParams,
    HyperParam,
    LocalTrainParams,
    MetricKind,
    MetricValue,
    Population,
    Statistics,
    average,
    cohort_seed,
    resolve,
)
from fedsim.feddata import UserDataset
from fedsim.models import (
    CentralOptimizer,
    Model,
    central_step,
    evaluate_model,
    local_train_sgd,
    model_update_delta,
)


class FedAvg(FederatedAlgorithm):
    """Weighted averaging of local SGD deltas with a central optimizer.

    Each iteration issues one training context; every
    ``eval_frequency`` iterations a validation context rides along.
    Users evaluate the broadcast model on their local data first (the
    source of train/val metrics), then training users run local SGD
    and return the weighted parameter delta.
    """

    def __init__(
        self,
        model: Model,
        optimizer: CentralOptimizer,
        *,
        total_iterations: int,
        cohort_size: int,
        local_learning_rate: "float | HyperParam",
        local_num_epochs: int,
        local_batch_size: int,
        eval_frequency: int,
        eval_cohort_size: int,
        eval_batch_size: int = 0,
        weighting: str = "datapoints",
        run_seed: int = 0,
        init_seed: int = 0,
        backend: str | None = None,
    ):
        if weighting not in ("datapoints", "uniform"):
            raise ValueError(f"unknown weighting {weighting!r}")
        if total_iterations < 0:
            raise ValueError("total_iterations must be >= 0")
        if eval_frequency < 1:
            raise ValueError("eval_frequency must be >= 1")
        self.model = model
        self.optimizer = optimizer
        self.total_iterations = total_iterations
        self.cohort_size = cohort_size
        self.local_learning_rate = local_learning_rate
        self.local_num_epochs = local_num_epochs
        self.local_batch_size = local_batch_size
        self.eval_frequency = eval_frequency
        self.eval_cohort_size = eval_cohort_size
        self.eval_batch_size = eval_batch_size
        self.weighting = weighting
        self.run_seed = run_seed
        self.init_seed = init_seed
        self.backend = backend

    def initial_state(self) -> AlgorithmState:
        return AlgorithmState(
            params=self.model.init_params(self.init_seed),
            optimizer=self.optimizer,
        )

    def _algo_params(self, state: AlgorithmState, iteration: int) -> dict[str, float]:
        return {}

    def _local_params(self, iteration: int) -> LocalTrainParams:
        return LocalTrainParams(
            learning_rate=resolve(self.local_learning_rate, iteration),
            num_epochs=self.local_num_epochs,
            batch_size=self.local_batch_size,
        )

    def get_next_central_contexts(
        self, state: AlgorithmState, iteration: int
    ) -> tuple[CentralContext, ...]:
        if iteration >= self.total_iterations:
            return ()
        contexts = [
            CentralContext(
                iteration=iteration,
                population=Population.TRAIN,
                cohort_size=self.cohort_size,
                seed=cohort_seed(self.run_seed, iteration, Population.TRAIN.value),
                do_training=True,
                local_params=self._local_params(iteration),
                eval_params=EvalParams(batch_size=self.eval_batch_size),
                algo_params=self._algo_params(state, iteration),
            )
        ]
        if iteration % self.eval_frequency == 0:
            contexts.append(
                CentralContext(
                    iteration=iteration,
                    population=Population.VAL,
                    cohort_size=self.eval_cohort_size,
                    seed=cohort_seed(self.run_seed, iteration, Population.VAL.value),
                    do_training=False,
                    eval_params=EvalParams(batch_size=self.eval_batch_size),
                )
            )
        return tuple(contexts)

    def _eval_metrics(
        self, state: AlgorithmState, user: UserDataset, context: CentralContext
    ) -> dict[str, MetricValue]:
        loss_sum, correct, n = evaluate_model(
            self.model, state.params, user.features, user.labels,
            batch_size=context.eval_params.batch_size,
            backend=self.backend,
        )
        return {
            "loss": MetricValue.from_user(MetricKind.CENTRAL, loss_sum, n),
            "accuracy": MetricValue.from_user(MetricKind.CENTRAL, correct, n),
            "per_user_accuracy": MetricValue.from_user(MetricKind.PER_USER, correct, n),
        }

    def _user_weight(self, user: UserDataset) -> float:
        return user.weight if self.weighting == "datapoints" else 1.0

    def _train_one_user(
        self,
        state: AlgorithmState,
        user: UserDataset,
        context: CentralContext,
        seed: int,
    ) -> tuple[Statistics, tuple[str, Any] | None]:
        trained = local_train_sgd(
            self.model, state.params, user.features, user.labels,
            context.local_params, seed, backend=self.backend,
        )
        delta = model_update_delta(state.params, trained, self._user_weight(user))
        return delta, None

    def simulate_one_user(
        self,
        state: AlgorithmState,
        user: UserDataset,
        context: CentralContext,
        seed: int,
    ) -> UserResult:
        metrics = self._eval_metrics(state, user, context)
        if not context.do_training:
            return UserResult(statistics=None, aux={}, metrics=metrics)
        stats, algo_update = self._train_one_user(state, user, context, seed)
        return UserResult(
            statistics=stats, aux={}, metrics=metrics, algo_update=algo_update
        )

    def _train_aggregate(
        self,
        contexts: Sequence[CentralContext],
        aggregates: Sequence[Statistics | None],
    ) -> Statistics | None:
        for context, agg in zip(contexts, aggregates):
            if context.do_training:
                return agg
        return None

    def process_aggregated_statistics_all_contexts(
        self,
        state: AlgorithmState,
        contexts: Sequence[CentralContext],
        aggregates: Sequence[Statistics | None],
        iteration_metrics: dict[tuple[str, str], MetricValue],
        user_updates: Sequence[tuple[str, Any]],
    ) -> AlgorithmState:
        agg = self._train_aggregate(contexts, aggregates)
        if agg is None:  # empty cohort: nothing to apply
            return state
        iteration = contexts[0].iteration
        state.params = central_step(
            state.optimizer, state.params, average(agg), iteration
        )
        return state


class FedProx(FedAvg):
    """FedAvg with a proximal pull toward the broadcast parameters.

    The local gradient gains ``mu * (theta - theta_t)``; ``mu = 0``
    reproduces FedAvg exactly (the shared kernel applies the same
    arithmetic with a zero coefficient).
    """

    def __init__(self, *args, mu: "float | HyperParam" = 0.0, **kwargs):
        super().__init__(*args, **kwargs)
        if resolve(mu, 0) < 0.0:
            raise ValueError("mu must be >= 0")
        self.mu = mu

    def _algo_params(self, state: AlgorithmState, iteration: int) -> dict[str, float]:
        return {"mu": resolve(self.mu, iteration)}

    def _train_one_user(self, state, user, context, seed):
        trained = local_train_sgd(
            self.model, state.params, user.features, user.labels,
            context.local_params, seed,
            prox_mu=context.algo_params["mu"],
            prox_anchor=state.params,
            backend=self.backend,
        )
        delta = model_update_delta(state.params, trained, self._user_weight(user))
        return delta, None


def adafedprox_update_mu(
    mu: float,
    previous_loss: float,
    current_loss: float,
    decrease_factor: float = 0.9,
    increase_factor: float = 1.1,
    floor: float = 1e-4,
    cap: float = 1.0,
) -> float:
    """Loss-driven proximal strength: relax when improving, tighten when not."""
    if current_loss < previous_loss:
        return max(mu * decrease_factor, floor)
    if current_loss > previous_loss:
        return min(mu * increase_factor, cap)
    return mu


class AdaFedProx(FedProx):
    """FedProx with ``mu`` adapted from the central training loss."""

    def __init__(
        self,
        *args,
        mu: float = 0.1,
        mu_decrease_factor: float = 0.9,
        mu_increase_factor: float = 1.1,
        mu_floor: float = 1e-4,
        mu_cap: float = 1.0,
        **kwargs,
    ):
        super().__init__(*args, mu=mu, **kwargs)
        self.mu_decrease_factor = mu_decrease_factor
        self.mu_increase_factor = mu_increase_factor
        self.mu_floor = mu_floor
        self.mu_cap = mu_cap

    def initial_state(self) -> AlgorithmState:
        state = super().initial_state()
        state.extra["mu"] = resolve(self.mu, 0)
        state.extra["previous_train_loss"] = None
        return state

    def _algo_params(self, state: AlgorithmState, iteration: int) -> dict[str, float]:
        return {"mu": state.extra["mu"]}

    def process_aggregated_statistics_all_contexts(
        self, state, contexts, aggregates, iteration_metrics, user_updates
    ) -> AlgorithmState:
        state = super().process_aggregated_statistics_all_contexts(
            state, contexts, aggregates, iteration_metrics, user_updates
        )
        loss = iteration_metrics.get((Population.TRAIN.value, "loss"))
        if loss is not None:
            current = loss.value
            previous = state.extra["previous_train_loss"]
            if previous is not None:
                state.extra["mu"] = adafedprox_update_mu(
                    state.extra["mu"], previous, current,
                    self.mu_decrease_factor, self.mu_increase_factor,
                    self.mu_floor, self.mu_cap,
                )
            state.extra["previous_train_loss"] = current
        return state
