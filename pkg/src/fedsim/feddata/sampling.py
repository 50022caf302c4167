"""Cohort sampling strategies."""

from __future__ import annotations

import numpy as np

from fedsim.core import make_rng
from fedsim.errors import CohortTooLarge
from fedsim.feddata.datasets import FederatedDataset


def sample_cohort(
    dataset: FederatedDataset,
    cohort_size: int,
    seed: int,
    mode: str = "fixed",
    poisson_rate: float | None = None,
) -> tuple[str, ...]:
    """Pick the user ids participating in one central iteration.

    ``fixed`` draws exactly ``cohort_size`` distinct users, returned in
    seeded draw order. ``poisson`` includes each user independently
    with probability ``poisson_rate`` (cohort_size is ignored and the
    result may be empty).
    """
    ids = dataset.user_ids
    rng = make_rng(seed)
    if mode == "fixed":
        if cohort_size > len(ids):
            raise CohortTooLarge(
                f"cohort of {cohort_size} from {len(ids)} users"
            )
        picks = rng.choice(len(ids), size=cohort_size, replace=False)
        return tuple(ids[i] for i in picks)
    if mode == "poisson":
        if poisson_rate is None or not 0.0 < poisson_rate <= 1.0:
            raise ValueError("poisson mode needs a rate in (0, 1]")
        mask = rng.random(len(ids)) < poisson_rate
        return tuple(uid for uid, m in zip(ids, mask) if m)
    raise ValueError(f"unknown sampling mode {mode!r}")


class CooldownSampler:
    """Fixed-size sampling that skips recently selected users.

    A user selected at iteration ``t`` is excluded until iteration
    ``t + cooldown``. Not enabled by default anywhere; provided as a
    drop-in for experiments on repeated-participation effects.
    """

    def __init__(self, cooldown: int):
        if cooldown < 1:
            raise ValueError("cooldown must be >= 1")
        self.cooldown = cooldown
        self._last_sampled: dict[str, int] = {}

    def sample(
        self,
        dataset: FederatedDataset,
        cohort_size: int,
        seed: int,
        iteration: int,
    ) -> tuple[str, ...]:
        eligible = [
            uid
            for uid in dataset.user_ids
            if iteration - self._last_sampled.get(uid, -np.inf) >= self.cooldown
        ]
        if cohort_size > len(eligible):
            raise CohortTooLarge(
                f"cohort of {cohort_size} from {len(eligible)} eligible users"
            )
        rng = make_rng(seed)
        picks = rng.choice(len(eligible), size=cohort_size, replace=False)
        chosen = tuple(eligible[i] for i in picks)
        for uid in chosen:
            self._last_sampled[uid] = iteration
        return chosen
