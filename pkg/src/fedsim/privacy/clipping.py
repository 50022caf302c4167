"""Norm clipping of per-user statistics, with optional bound adaptation.

Entry names starting with an underscore are bookkeeping channels
(counts, clip indicators) that ride along inside the statistics so
they aggregate through the same accumulate/reduce path as the payload;
they are excluded from norms and stripped before the aggregate leaves
the pipeline.
"""

from __future__ import annotations

import numpy as np

from fedsim.core import (
    CentralContext,
    MetricKind,
    MetricValue,
    Statistics,
    global_norm,
)
from fedsim.privacy.config import AdaptiveClipConfig

BOOKKEEPING_PREFIX = "_"

CLIPPED_KEY = "_clip/clipped"
COUNT_KEY = "_clip/count"
NORM_KEY = "_clip/norm_sum"

MIN_BOUND = 1e-6
MAX_BOUND = 1e6


def payload_names(stats: Statistics) -> tuple[str, ...]:
    return tuple(n for n in stats.names if not n.startswith(BOOKKEEPING_PREFIX))


def clip_norm(
    stats: Statistics, bound: float, order: float = 2.0
) -> tuple[Statistics, bool, float]:
    """Scale payload entries so their global norm is at most ``bound``.

    Returns (clipped statistics, whether scaling happened, original
    norm). The weight and any bookkeeping entries are untouched.
    """
    if bound <= 0.0:
        raise ValueError("clipping bound must be > 0")
    names = payload_names(stats)
    norm = global_norm(stats, order=order, names=names)
    if norm <= bound:
        return stats, False, norm
    factor = bound / norm
    entries = {
        name: vec * factor if name in names else vec
        for name, vec in stats.entries.items()
    }
    return Statistics(entries=entries, weight=stats.weight), True, norm


def adaptive_clip_update(
    bound: float,
    clipped_fraction: float,
    quantile: float,
    learning_rate: float,
) -> float:
    """Geometric bound update from the observed clipped fraction.

    The bound shrinks when more users clip than the target quantile
    and grows when fewer do; at equality it is a fixed point. Clamped
    to a wide positive range so it can never reach zero or overflow.
    """
    new = bound * float(np.exp(-learning_rate * (clipped_fraction - quantile)))
    return float(np.clip(new, MIN_BOUND, MAX_BOUND))


class ClippingPostprocessor:
    """Clips each user's statistics and tracks the live bound.

    The local side appends bookkeeping entries (clip indicator, count,
    original norm) so the server side can report the clipped fraction
    and mean update norm, and, when adaptation is configured, move the
    bound for the next iteration. Mechanisms read ``current_bound``
    while it still holds the value applied to this iteration's users.
    """

    is_clipping = True

    def __init__(
        self,
        bound: float,
        norm_order: float = 2.0,
        adaptive: AdaptiveClipConfig | None = None,
    ):
        if bound <= 0.0:
            raise ValueError("bound must be > 0")
        if norm_order not in (1.0, 2.0):
            raise ValueError("norm_order must be 1 or 2")
        self._bound = float(bound)
        self.norm_order = norm_order
        self.adaptive = adaptive

    @property
    def current_bound(self) -> float:
        return self._bound

    def postprocess_one_user(
        self, stats: Statistics, aux: dict, context: CentralContext
    ) -> Statistics:
        clipped_stats, was_clipped, norm = clip_norm(
            stats, self._bound, self.norm_order
        )
        aux["clip/original_norm"] = norm
        aux["clip/clipped"] = float(was_clipped)
        entries = dict(clipped_stats.entries)
        entries[CLIPPED_KEY] = np.array([1.0 if was_clipped else 0.0])
        entries[COUNT_KEY] = np.array([1.0])
        entries[NORM_KEY] = np.array([norm])
        return Statistics(entries=entries, weight=stats.weight)

    def postprocess_server(
        self, stats: Statistics, context: CentralContext
    ) -> tuple[Statistics, dict[str, MetricValue]]:
        count = float(stats.entries[COUNT_KEY][0])
        clipped_sum = float(stats.entries[CLIPPED_KEY][0])
        norm_sum = float(stats.entries[NORM_KEY][0])
        bound_used = self._bound
        metrics = {
            "clip_fraction": MetricValue(MetricKind.CENTRAL, clipped_sum, count),
            "update_norm": MetricValue(MetricKind.CENTRAL, norm_sum, count),
            "clipping_bound": MetricValue(MetricKind.CENTRAL, bound_used, 1.0),
        }
        if self.adaptive is not None and count > 0:
            self._bound = adaptive_clip_update(
                self._bound,
                clipped_sum / count,
                self.adaptive.quantile,
                self.adaptive.learning_rate,
            )
        stripped = Statistics(
            entries={
                name: vec
                for name, vec in stats.entries.items()
                if not name.startswith(BOOKKEEPING_PREFIX)
            },
            weight=stats.weight,
        )
        return stripped, metrics
