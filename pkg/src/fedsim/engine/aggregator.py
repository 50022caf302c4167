"""Accumulate/reduce pair used to combine user statistics.

Workers each fold their users into a private partial state with
``accumulate`` (f); the partials are then joined with ``worker_reduce``
(g).  The two must commute - ``g({f(S_a, d), S_b}) == f(g({S_a, S_b}), d)``
- so the final aggregate is independent of how users were split across
workers.  Plain summation satisfies this exactly up to float rounding.
"""

from __future__ import annotations

from typing import Sequence

from fedsim.core import Statistics, accumulate


class Aggregator:
    """Contract: an associative/commutative accumulate-reduce pair."""

    def accumulate(
        self, partial: Statistics | None, update: Statistics
    ) -> Statistics:
        raise NotImplementedError

    def worker_reduce(
        self, partials: Sequence[Statistics | None]
    ) -> Statistics | None:
        raise NotImplementedError


class SumAggregator(Aggregator):
    """Elementwise sum of entries, sum of weights.

    ``None`` is the zero state: a worker that saw no training
    statistics contributes nothing, and a reduce over only-``None``
    partials (an eval-only context) yields ``None``.
    """

    def accumulate(
        self, partial: Statistics | None, update: Statistics
    ) -> Statistics:
        if partial is None:
            return update
        return accumulate(partial, update)

    def worker_reduce(
        self, partials: Sequence[Statistics | None]
    ) -> Statistics | None:
        present = [p for p in partials if p is not None]
        if not present:
            return None
        return worker_reduce_sum(present)


def worker_reduce_sum(worker_states: Sequence[Statistics]) -> Statistics:
    """All-reduce of per-worker partial sums: elementwise +, weight sum."""
    if not worker_states:
        raise ValueError("worker_reduce_sum needs at least one state")
    total = worker_states[0]
    for state in worker_states[1:]:
        total = accumulate(total, state)
    return total
