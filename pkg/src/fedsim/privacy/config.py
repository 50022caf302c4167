"""Privacy pipeline configuration."""

from __future__ import annotations

import enum
from dataclasses import dataclass


class Mechanism(enum.Enum):
    NONE = "none"
    GAUSSIAN_CENTRAL = "gaussian"
    LAPLACE_CENTRAL = "laplace"
    GAUSSIAN_LOCAL_APPROX = "gaussian_local_approx"


@dataclass(frozen=True)
class AdaptiveClipConfig:
    """Geometric clipping-bound adaptation toward a clipped-fraction target."""

    quantile: float
    learning_rate: float

    def __post_init__(self) -> None:
        if not 0.0 < self.quantile < 1.0:
            raise ValueError("quantile must be in (0, 1)")
        if self.learning_rate <= 0.0:
            raise ValueError("learning_rate must be > 0")


@dataclass(frozen=True)
class PrivacyConfig:
    """Everything needed to build and account a private training run.

    The accounting sampling rate is ``q = noise_cohort / population``;
    the applied noise is rescaled by ``r = cohort / noise_cohort`` so a
    simulation with a small cohort carries the per-element noise of the
    full-size deployment cohort. Both r <= 1 and r > 1 are legal.
    """

    mechanism: Mechanism
    epsilon: float = 0.0
    delta: float = 0.0
    population: int = 0
    cohort_size: int = 0
    noise_cohort_size: int = 0
    clipping_bound: float = 0.0
    total_iterations: int = 0
    adaptive_clip: AdaptiveClipConfig | None = None
    sigma: float | None = None
    laplace_epsilon_per_query: float | None = None
    local_noise_std: float | None = None
    privatize_clip_signal: bool = False

    def __post_init__(self) -> None:
        if self.mechanism is Mechanism.NONE:
            return
        if self.clipping_bound <= 0.0:
            raise ValueError("clipping_bound must be > 0")
        if self.mechanism is Mechanism.GAUSSIAN_CENTRAL:
            if self.population < 1 or self.noise_cohort_size < 1:
                raise ValueError("population and noise_cohort_size must be >= 1")
            if self.cohort_size < 1:
                raise ValueError("cohort_size must be >= 1")
            if not 0.0 < self.q <= 1.0:
                raise ValueError("sampling rate q must be in (0, 1]")
            if self.sigma is None:
                if self.epsilon <= 0.0 or not 0.0 < self.delta < 1.0:
                    raise ValueError(
                        "need epsilon > 0 and delta in (0, 1) to calibrate sigma"
                    )
                if self.total_iterations < 1:
                    raise ValueError("total_iterations must be >= 1 for accounting")
        if self.mechanism is Mechanism.LAPLACE_CENTRAL:
            if self.laplace_epsilon_per_query is None or self.laplace_epsilon_per_query <= 0:
                raise ValueError("laplace mechanism needs epsilon_per_query > 0")
        if self.mechanism is Mechanism.GAUSSIAN_LOCAL_APPROX:
            if self.local_noise_std is None or self.local_noise_std < 0:
                raise ValueError("local approximation needs local_noise_std >= 0")

    @property
    def q(self) -> float:
        return self.noise_cohort_size / self.population

    @property
    def r(self) -> float:
        return self.cohort_size / self.noise_cohort_size
