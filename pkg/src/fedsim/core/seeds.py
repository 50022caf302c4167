"""Deterministic seed derivation.

Every random draw in a simulation flows from a named stream derived by
hashing the run seed together with structural coordinates (iteration,
population, user id). The hash is platform-stable, unlike Python's
builtin ``hash``, so runs reproduce across processes and machines.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK = (1 << 63) - 1


def derive_seed(*parts: int | str) -> int:
    """Stable 63-bit seed from a sequence of ints and strings."""
    h = hashlib.sha256()
    for part in parts:
        h.update(repr(part).encode())
        h.update(b"\x1f")
    return int.from_bytes(h.digest()[:8], "little") & _MASK


def make_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)


def user_seed(context_seed: int, user_id: str) -> int:
    """Per-user stream; depends only on the context seed and user id."""
    return derive_seed(context_seed, "user", user_id)


def cohort_seed(run_seed: int, iteration: int, population: str) -> int:
    return derive_seed(run_seed, "cohort", iteration, population)


def noise_seed(noise_base_seed: int, iteration: int, population: str) -> int:
    """Dedicated stream for privacy noise, independent of data sampling."""
    return derive_seed(noise_base_seed, "noise", iteration, population)
