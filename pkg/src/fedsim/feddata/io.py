"""CSV persistence for partitioned datasets.

Row format: ``user_id,f0,...,f{dim-1},label``. Floats are written with
shortest round-trip repr, so save/load is lossless.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from fedsim.core import Population
from fedsim.errors import DataError
from fedsim.feddata.datasets import FederatedDataset, UserDataset


def save_partition(dataset: FederatedDataset, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        dim = next(iter(dataset.users.values())).features.shape[1]
        writer.writerow(["user_id", *[f"f{i}" for i in range(dim)], "label"])
        for user in dataset.users.values():
            for row, label in zip(user.features, user.labels):
                writer.writerow([user.user_id, *[repr(float(x)) for x in row], int(label)])


def load_partition(path: str | Path, population: Population) -> FederatedDataset:
    path = Path(path)
    if not path.exists():
        raise DataError(f"partition file not found: {path}")
    by_user: dict[str, tuple[list[list[float]], list[int]]] = {}
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"partition file is empty: {path}") from None
        if header[0] != "user_id" or header[-1] != "label":
            raise DataError(f"unexpected partition header in {path}: {header}")
        dim = len(header) - 2
        for lineno, row in enumerate(reader, start=2):
            if len(row) != dim + 2:
                raise DataError(f"{path}:{lineno}: expected {dim + 2} columns")
            feats, labels = by_user.setdefault(row[0], ([], []))
            feats.append([float(x) for x in row[1:-1]])
            labels.append(int(row[-1]))
    users = {
        uid: UserDataset(
            user_id=uid,
            features=np.array(feats, dtype=np.float64).reshape(len(labels), dim),
            labels=np.array(labels, dtype=np.int64),
        )
        for uid, (feats, labels) in by_user.items()
    }
    if not users:
        raise DataError(f"partition file has no rows: {path}")
    return FederatedDataset(users=users, population=population)
