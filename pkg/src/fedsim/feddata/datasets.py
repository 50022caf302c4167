"""User-keyed dataset containers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from fedsim.core import Population


@dataclass(frozen=True)
class UserDataset:
    """One simulated user's local data.

    The aggregation weight equals the number of datapoints, so
    datapoint-weighted averaging falls out of the statistics algebra.
    """

    user_id: str
    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self) -> None:
        if self.features.ndim != 2:
            raise ValueError("features must be a (num_points, dim) array")
        if self.labels.shape != (self.features.shape[0],):
            raise ValueError("labels must be a vector aligned with features")
        if self.features.shape[0] < 1:
            raise ValueError("a user needs at least one datapoint")
        if not np.all(np.isfinite(self.features)):
            raise ValueError("features contain non-finite values")

    @property
    def num_points(self) -> int:
        return self.features.shape[0]

    @property
    def weight(self) -> float:
        return float(self.num_points)


@dataclass(frozen=True)
class FederatedDataset:
    """An ordered collection of users belonging to one population."""

    users: dict[str, UserDataset]
    population: Population

    def __post_init__(self) -> None:
        for uid, user in self.users.items():
            if uid != user.user_id:
                raise ValueError(f"key {uid!r} does not match user_id {user.user_id!r}")

    @property
    def num_users(self) -> int:
        return len(self.users)

    @property
    def user_ids(self) -> tuple[str, ...]:
        return tuple(self.users)

    @property
    def total_points(self) -> int:
        return sum(u.num_points for u in self.users.values())
