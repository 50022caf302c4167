"""Stochastic controlled averaging with per-user control variates.

Each user keeps a control vector correcting client drift; the
simulation stores them server-side keyed by user id (a shortcut only a
simulator can take) and initializes them lazily to zero on first
participation. Users train with the corrected gradient
``g - c_i + c``, then report both their model delta and their control
delta in one statistics bundle under disjoint name prefixes; averaging
is uniform regardless of local dataset sizes.
"""

from __future__ import annotations

from typing import Any, Sequence

import numpy as np

from fedsim.algorithms.base import AlgorithmState
from fedsim.algorithms.fedavg import FedAvg
from fedsim.core import Statistics, average, resolve
from fedsim.errors import ZeroLocalSteps
from fedsim.models import central_step, count_local_steps, local_train_sgd

MODEL_PREFIX = "model/"
CONTROL_PREFIX = "control/"


class Scaffold(FedAvg):
    def __init__(self, *args, num_train_users: int, **kwargs):
        kwargs.setdefault("weighting", "uniform")
        if kwargs["weighting"] != "uniform":
            raise ValueError("control-variate averaging must be uniform")
        super().__init__(*args, **kwargs)
        if num_train_users < 1:
            raise ValueError("num_train_users must be >= 1")
        self.num_train_users = num_train_users

    def initial_state(self) -> AlgorithmState:
        state = super().initial_state()
        state.extra["server_control"] = {
            name: np.zeros_like(vec) for name, vec in state.params.items()
        }
        state.extra["user_controls"] = {}
        return state

    def _train_one_user(self, state, user, context, seed):
        local_params = context.local_params
        num_steps = count_local_steps(user.num_points, local_params)
        if num_steps * local_params.learning_rate == 0.0:
            raise ZeroLocalSteps(
                "control update divides by steps * learning_rate; "
                f"got {num_steps} steps at lr {local_params.learning_rate}"
            )
        server_control = state.extra["server_control"]
        user_control = state.extra["user_controls"].get(user.user_id)
        if user_control is None:
            user_control = {n: np.zeros_like(v) for n, v in state.params.items()}
        correction = {
            name: server_control[name] - user_control[name] for name in server_control
        }
        trained = local_train_sgd(
            self.model, state.params, user.features, user.labels,
            local_params, seed, control=correction, backend=self.backend,
        )
        delta = {name: state.params[name] - trained[name] for name in state.params}
        scale = 1.0 / (num_steps * local_params.learning_rate)
        new_control = {
            name: user_control[name] - server_control[name] + delta[name] * scale
            for name in delta
        }
        entries = {MODEL_PREFIX + name: vec for name, vec in delta.items()}
        entries.update(
            {
                CONTROL_PREFIX + name: new_control[name] - user_control[name]
                for name in new_control
            }
        )
        stats = Statistics.from_entries(entries, 1.0)
        return stats, (user.user_id, new_control)

    def process_aggregated_statistics_all_contexts(
        self,
        state: AlgorithmState,
        contexts,
        aggregates,
        iteration_metrics,
        user_updates: Sequence[tuple[str, Any]],
    ) -> AlgorithmState:
        for user_id, new_control in user_updates:
            state.extra["user_controls"][user_id] = new_control
        agg = self._train_aggregate(contexts, aggregates)
        if agg is None:
            return state
        iteration = contexts[0].iteration
        averaged = average(agg)
        model_delta = Statistics.from_entries(
            {
                name[len(MODEL_PREFIX):]: vec
                for name, vec in averaged.entries.items()
                if name.startswith(MODEL_PREFIX)
            },
            1.0,
        )
        state.params = central_step(
            state.optimizer, state.params, model_delta, iteration
        )
        # server control moves by the cohort fraction of the mean control delta
        fraction = agg.weight / self.num_train_users
        server_control = state.extra["server_control"]
        for name in server_control:
            server_control[name] = (
                server_control[name]
                + fraction * averaged.entries[CONTROL_PREFIX + name]
            )
        return state
