"""Partitioners that turn a flat pool of points into per-user datasets."""

from __future__ import annotations

import logging

import numpy as np

from fedsim.core import Population, make_rng
from fedsim.errors import InsufficientData, TooFewPoints
from fedsim.feddata.datasets import FederatedDataset, UserDataset

logger = logging.getLogger(__name__)


def _build(features, labels, chunks, population, id_prefix) -> FederatedDataset:
    users: dict[str, UserDataset] = {}
    for i, idx in enumerate(chunks):
        uid = f"{id_prefix}{i:05d}"
        users[uid] = UserDataset(
            user_id=uid,
            features=features[idx],
            labels=labels[idx].astype(np.int64),
        )
    return FederatedDataset(users=users, population=population)


def partition_iid(
    features: np.ndarray,
    labels: np.ndarray,
    points_per_user: int,
    seed: int,
    population: Population = Population.TRAIN,
    id_prefix: str = "u",
) -> FederatedDataset:
    """Shuffle the pool and deal equal-size slices to users.

    Leftover points that do not fill a complete user are dropped (and
    logged). Raises TooFewPoints if not even one user can be filled.
    """
    total = features.shape[0]
    if points_per_user < 1:
        raise ValueError("points_per_user must be >= 1")
    num_users = total // points_per_user
    if num_users == 0:
        raise TooFewPoints(
            f"{total} points cannot fill a user of {points_per_user}"
        )
    dropped = total - num_users * points_per_user
    if dropped:
        logger.warning("dropping %d points that do not fill a full user", dropped)
    perm = make_rng(seed).permutation(total)
    chunks = [
        perm[i * points_per_user : (i + 1) * points_per_user]
        for i in range(num_users)
    ]
    return _build(features, labels, chunks, population, id_prefix)


def partition_dirichlet(
    features: np.ndarray,
    labels: np.ndarray,
    num_users: int,
    points_per_user: int,
    alpha: float,
    seed: int,
    population: Population = Population.TRAIN,
    id_prefix: str = "u",
) -> FederatedDataset:
    """Give each user a class mixture drawn from Dirichlet(alpha).

    Every user receives exactly ``points_per_user`` points, sampled
    class by class without replacement from per-class pools. When a
    class pool runs dry its probability mass is renormalized over the
    remaining classes, so low ``alpha`` still yields highly skewed but
    complete users.
    """
    if alpha <= 0.0:
        raise ValueError("alpha must be > 0")
    if num_users < 1 or points_per_user < 1:
        raise ValueError("num_users and points_per_user must be >= 1")
    total = features.shape[0]
    needed = num_users * points_per_user
    if total < needed:
        raise InsufficientData(f"need {needed} points, pool has {total}")

    rng = make_rng(seed)
    classes = np.unique(labels)
    num_classes = classes.size
    pools = []
    for k in classes:
        idx = np.flatnonzero(labels == k)
        rng.shuffle(idx)
        pools.append(list(idx))
    remaining = np.array([len(p) for p in pools])

    chunks = []
    for _ in range(num_users):
        p = rng.dirichlet(np.full(num_classes, alpha))
        taken: list[int] = []
        cum = None
        for _ in range(points_per_user):
            if cum is None:
                q = np.where(remaining > 0, p, 0.0)
                s = q.sum()
                if s == 0.0:  # all of this user's mass sits on empty pools
                    q = (remaining > 0).astype(np.float64)
                    s = q.sum()
                cum = np.cumsum(q / s)
            k = int(np.searchsorted(cum, rng.random(), side="right"))
            if k >= num_classes or remaining[k] == 0:
                k = int(np.flatnonzero(remaining > 0)[-1])
            taken.append(pools[k].pop())
            remaining[k] -= 1
            if remaining[k] == 0:
                cum = None
        chunks.append(np.array(taken))
    return _build(features, labels, chunks, population, id_prefix)
