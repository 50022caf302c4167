"""Built-in models, local SGD, central optimizers, checkpoints."""

from fedsim.models.checkpoint import load_params, save_params
from fedsim.models.kernels import (
    HAS_NUMBA,
    KernelSet,
    available_backends,
    default_backend,
    get_kernels,
)
from fedsim.models.models import (
    MLP,
    LogisticRegression,
    Model,
    count_local_steps,
    evaluate_model,
    local_train_sgd,
)
from fedsim.models.optimizers import (
    AdamOptimizer,
    CentralOptimizer,
    SGDOptimizer,
    central_step,
)
from fedsim.models.params import (
    ModelParams,
    apply_delta,
    check_same_structure,
    clone_params,
    model_update_delta,
    params_total_dims,
)

__all__ = [
    "AdamOptimizer",
    "CentralOptimizer",
    "HAS_NUMBA",
    "KernelSet",
    "LogisticRegression",
    "MLP",
    "Model",
    "ModelParams",
    "SGDOptimizer",
    "apply_delta",
    "available_backends",
    "central_step",
    "check_same_structure",
    "clone_params",
    "count_local_steps",
    "default_backend",
    "evaluate_model",
    "get_kernels",
    "load_params",
    "local_train_sgd",
    "model_update_delta",
    "params_total_dims",
    "save_params",
]
