"""Core value types: statistics algebra, metrics, contexts, schedules."""

from fedsim.core.context import (
    CentralContext,
    EvalParams,
    LocalTrainParams,
    Population,
)
from fedsim.core.hyperparams import (
    Constant,
    HyperParam,
    LinearWarmup,
    PiecewiseConstant,
    resolve,
)
from fedsim.core.metrics import (
    MetricKind,
    MetricValue,
    merge_metrics,
    metric_aggregate,
)
from fedsim.core.seeds import (
    cohort_seed,
    derive_seed,
    make_rng,
    noise_seed,
    user_seed,
)
from fedsim.core.statistics import (
    Statistics,
    accumulate,
    average,
    global_norm,
    scale_entries,
    weighted,
)

__all__ = [
    "CentralContext",
    "Constant",
    "EvalParams",
    "HyperParam",
    "LinearWarmup",
    "LocalTrainParams",
    "MetricKind",
    "MetricValue",
    "PiecewiseConstant",
    "Population",
    "Statistics",
    "accumulate",
    "average",
    "cohort_seed",
    "derive_seed",
    "global_norm",
    "make_rng",
    "merge_metrics",
    "metric_aggregate",
    "noise_seed",
    "resolve",
    "scale_entries",
    "user_seed",
    "weighted",
]
