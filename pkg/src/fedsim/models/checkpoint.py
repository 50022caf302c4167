"""Lossless named-vector checkpoints.

CSV layout: a version header row, a column header, then one row per
scalar: ``name,index,value``. Values use shortest round-trip repr so
load(save(p)) == p exactly.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from fedsim.errors import DataError
from fedsim.models.params import ModelParams

FORMAT_NAME = "fedsim-params"
FORMAT_VERSION = 1


def save_params(params: ModelParams, path: "str | Path") -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([FORMAT_NAME, FORMAT_VERSION])
        writer.writerow(["name", "index", "value"])
        for name, vec in params.items():
            for i, v in enumerate(vec):
                writer.writerow([name, i, repr(float(v))])


def load_params(path: "str | Path") -> ModelParams:
    path = Path(path)
    if not path.exists():
        raise DataError(f"checkpoint not found: {path}")
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[0] != FORMAT_NAME:
            raise DataError(f"not a parameter checkpoint: {path}")
        if int(header[1]) != FORMAT_VERSION:
            raise DataError(f"unsupported checkpoint version {header[1]} in {path}")
        next(reader)  # column header
        collected: dict[str, list[tuple[int, float]]] = {}
        for row in reader:
            collected.setdefault(row[0], []).append((int(row[1]), float(row[2])))
    out: ModelParams = {}
    for name, pairs in collected.items():
        pairs.sort()
        out[name] = np.array([v for _, v in pairs], dtype=np.float64)
    return out
