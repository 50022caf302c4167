"""Central noise mechanisms applied to the reduced aggregate.

All mechanisms operate on the summed (pre-averaging) aggregate: noise
std is calibrated against per-user sensitivity, and the later division
by total weight shrinks signal and noise together. Noise comes from a
dedicated seed stream so privacy on/off runs share cohorts and local
training randomness.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from fedsim.core import (
    CentralContext,
    MetricKind,
    MetricValue,
    Statistics,
    global_norm,
    make_rng,
    noise_seed,
)
from fedsim.errors import NotClippedUpstream
from fedsim.privacy.clipping import COUNT_KEY, ClippingPostprocessor, payload_names


def snr(aggregate: Statistics, sigma_applied: float, dimension: int) -> float:
    """Signal-to-noise ratio ||delta||_2 / sqrt(d * sigma^2).

    ``aggregate`` must be the un-noised aggregate; only payload entries
    contribute to the signal norm. Zero signal with positive noise is
    0; positive signal with zero noise is +inf; both zero is undefined.
    """
    if sigma_applied < 0.0:
        raise ValueError("sigma_applied must be >= 0")
    if dimension < 1:
        raise ValueError("dimension must be >= 1")
    signal = global_norm(aggregate, names=payload_names(aggregate))
    if sigma_applied == 0.0:
        if signal == 0.0:
            raise ValueError("SNR undefined: zero signal and zero noise")
        return math.inf
    return signal / math.sqrt(dimension * sigma_applied**2)


def clt_local_approximation(local_noise_std: float, cohort_size: int) -> float:
    """Central std whose single draw matches the sum of per-user draws."""
    if local_noise_std < 0.0:
        raise ValueError("local_noise_std must be >= 0")
    if cohort_size < 1:
        raise ValueError("cohort_size must be >= 1")
    return local_noise_std * math.sqrt(cohort_size)


def _add_noise(
    aggregate: Statistics,
    std_or_scale: float,
    rng: np.random.Generator,
    names: Sequence[str],
    distribution: str,
) -> Statistics:
    if std_or_scale == 0.0 or not names:
        return aggregate
    entries = dict(aggregate.entries)
    for name in names:
        vec = entries[name]
        if distribution == "gaussian":
            noise = rng.normal(0.0, std_or_scale, vec.size)
        else:
            noise = rng.laplace(0.0, std_or_scale, vec.size)
        entries[name] = vec + noise
    return Statistics(entries=entries, weight=aggregate.weight)


def gaussian_mechanism_central(
    aggregate: Statistics,
    bound: float,
    sigma: float,
    r: float,
    rng: np.random.Generator,
    names: Sequence[str] | None = None,
) -> Statistics:
    """Add iid Gaussian noise with std ``r * sigma * bound`` per element.

    ``r`` rescales for a noise cohort larger (or smaller) than the
    simulated one, so the averaged aggregate carries deployment-size
    noise.
    """
    if sigma < 0.0 or r <= 0.0 or bound <= 0.0:
        raise ValueError("need sigma >= 0, r > 0, bound > 0")
    if names is None:
        names = payload_names(aggregate)
    return _add_noise(aggregate, r * sigma * bound, rng, names, "gaussian")


def laplace_mechanism_central(
    aggregate: Statistics,
    l1_bound: float,
    epsilon_per_query: float,
    rng: np.random.Generator,
    names: Sequence[str] | None = None,
) -> Statistics:
    """Add iid Laplace noise with scale ``l1_bound / epsilon_per_query``."""
    if l1_bound <= 0.0 or epsilon_per_query <= 0.0:
        raise ValueError("need l1_bound > 0 and epsilon_per_query > 0")
    if names is None:
        names = payload_names(aggregate)
    scale = 0.0 if math.isinf(epsilon_per_query) else l1_bound / epsilon_per_query
    return _add_noise(aggregate, scale, rng, names, "laplace")


class _CentralNoisePostprocessor:
    """Shared plumbing: no local hook, seeded server-side noise, SNR metric."""

    requires_clipping = True

    def __init__(
        self,
        clipping: ClippingPostprocessor,
        noise_base_seed: int,
        privatize_bookkeeping: bool = False,
    ):
        self.clipping = clipping
        self.noise_base_seed = noise_base_seed
        self.privatize_bookkeeping = privatize_bookkeeping

    def postprocess_one_user(
        self, stats: Statistics, aux: dict, context: CentralContext
    ) -> Statistics:
        return stats

    def _noise_std(self, stats: Statistics, context: CentralContext) -> float:
        raise NotImplementedError

    def _distribution(self) -> str:
        return "gaussian"

    def _noise_names(self, stats: Statistics) -> tuple[str, ...]:
        if self.privatize_bookkeeping:
            return stats.names
        return payload_names(stats)

    def postprocess_server(
        self, stats: Statistics, context: CentralContext
    ) -> tuple[Statistics, dict[str, MetricValue]]:
        std = self._noise_std(stats, context)
        names = self._noise_names(stats)
        payload = payload_names(stats)
        dimension = sum(stats.entries[n].size for n in payload)
        metrics: dict[str, MetricValue] = {
            "noise_std": MetricValue(MetricKind.CENTRAL, std, 1.0)
        }
        # gaussian noise std and laplace scale share the role of sigma here
        effective_std = std if self._distribution() == "gaussian" else std * math.sqrt(2)
        try:
            ratio = snr(stats, effective_std, max(dimension, 1))
        except ValueError:
            ratio = None
        if ratio is not None and math.isfinite(ratio):
            metrics["snr"] = MetricValue(MetricKind.CENTRAL, ratio, 1.0)
        rng = make_rng(
            noise_seed(self.noise_base_seed, context.iteration, context.population.value)
        )
        noised = _add_noise(stats, std, rng, names, self._distribution())
        return noised, metrics


class GaussianCentralMechanism(_CentralNoisePostprocessor):
    """Central Gaussian noise tracking the live clipping bound."""

    def __init__(
        self,
        clipping: ClippingPostprocessor,
        sigma: float,
        r: float,
        noise_base_seed: int,
        privatize_bookkeeping: bool = False,
    ):
        super().__init__(clipping, noise_base_seed, privatize_bookkeeping)
        if sigma < 0.0:
            raise ValueError("sigma must be >= 0")
        if r <= 0.0:
            raise ValueError("r must be > 0")
        if clipping.norm_order != 2.0:
            raise ValueError("gaussian mechanism needs an L2 clipping bound")
        self.sigma = sigma
        self.r = r

    def _noise_std(self, stats, context) -> float:
        return self.r * self.sigma * self.clipping.current_bound


class LaplaceCentralMechanism(_CentralNoisePostprocessor):
    """Central Laplace noise scaled to the live L1 clipping bound."""

    def __init__(
        self,
        clipping: ClippingPostprocessor,
        epsilon_per_query: float,
        noise_base_seed: int,
        privatize_bookkeeping: bool = False,
    ):
        super().__init__(clipping, noise_base_seed, privatize_bookkeeping)
        if epsilon_per_query <= 0.0:
            raise ValueError("epsilon_per_query must be > 0")
        if clipping.norm_order != 1.0:
            raise ValueError("laplace mechanism needs an L1 clipping bound")
        self.epsilon_per_query = epsilon_per_query

    def _distribution(self) -> str:
        return "laplace"

    def _noise_std(self, stats, context) -> float:
        if math.isinf(self.epsilon_per_query):
            return 0.0
        return self.clipping.current_bound / self.epsilon_per_query


class GaussianLocalApproxMechanism(_CentralNoisePostprocessor):
    """One central draw standing in for per-user local Gaussian noise.

    By the central limit view of summation the aggregate of C locally
    noised updates equals the clean aggregate plus Gaussian noise of
    std ``local_noise_std * sqrt(C)``; applying that once per iteration
    is dramatically cheaper and distributionally indistinguishable.
    """

    def __init__(
        self,
        clipping: ClippingPostprocessor,
        local_noise_std: float,
        noise_base_seed: int,
        privatize_bookkeeping: bool = False,
    ):
        super().__init__(clipping, noise_base_seed, privatize_bookkeeping)
        if local_noise_std < 0.0:
            raise ValueError("local_noise_std must be >= 0")
        self.local_noise_std = local_noise_std

    def _noise_std(self, stats, context) -> float:
        contributors = int(round(float(stats.entries[COUNT_KEY][0])))
        return clt_local_approximation(self.local_noise_std, max(contributors, 1))


def validate_pipeline(postprocessors: Sequence) -> None:
    """Reject pipelines where a mechanism runs before its clipping step.

    Clipping fixes the per-user sensitivity; noise calibrated to a
    bound that was never applied would be meaningless, so the exact
    clipping instance a mechanism references must appear earlier in
    the declared (local-side) order.
    """
    for i, proc in enumerate(postprocessors):
        if not getattr(proc, "requires_clipping", False):
            continue
        clip = getattr(proc, "clipping", None)
        if clip is None or not any(clip is p for p in postprocessors[:i]):
            raise NotClippedUpstream(
                f"{type(proc).__name__} at position {i} has no upstream "
                "clipping postprocessor"
            )
