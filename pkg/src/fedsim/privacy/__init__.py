"""Differential privacy: clipping, mechanisms, accounting, diagnostics."""

from fedsim.privacy.accountant import (
    ORDER_GRID,
    SIGMA_BRACKET,
    AccountantResult,
    calibrate_sigma,
    rdp_account,
    rdp_epsilon,
)
from fedsim.privacy.clipping import (
    ClippingPostprocessor,
    adaptive_clip_update,
    clip_norm,
    payload_names,
)
from fedsim.privacy.config import AdaptiveClipConfig, Mechanism, PrivacyConfig
from fedsim.privacy.mechanisms import (
    GaussianCentralMechanism,
    GaussianLocalApproxMechanism,
    LaplaceCentralMechanism,
    clt_local_approximation,
    gaussian_mechanism_central,
    laplace_mechanism_central,
    snr,
    validate_pipeline,
)

__all__ = [
    "AccountantResult",
    "AdaptiveClipConfig",
    "ClippingPostprocessor",
    "GaussianCentralMechanism",
    "GaussianLocalApproxMechanism",
    "LaplaceCentralMechanism",
    "Mechanism",
    "ORDER_GRID",
    "PrivacyConfig",
    "SIGMA_BRACKET",
    "adaptive_clip_update",
    "calibrate_sigma",
    "clip_norm",
    "clt_local_approximation",
    "gaussian_mechanism_central",
    "laplace_mechanism_central",
    "payload_names",
    "rdp_account",
    "rdp_epsilon",
    "snr",
    "validate_pipeline",
]
