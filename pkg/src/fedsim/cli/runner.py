"""Turn a resolved config into datasets, a pipeline, and output files."""

from __future__ import annotations

import json
import time
from pathlib import Path
from typing import Any, TextIO

from fedsim.algorithms import AdaFedProx, FedAvg, FedProx, Scaffold
from fedsim.core import HyperParam, LinearWarmup, Population, derive_seed
from fedsim.engine import SimulationEngine, SimulationResult, run_simulation
from fedsim.feddata import (
    FederatedDataset,
    load_partition,
    make_synthetic_classification,
    partition_dirichlet,
    partition_iid,
)
from fedsim.models import (
    MLP,
    AdamOptimizer,
    LogisticRegression,
    SGDOptimizer,
    default_backend,
    save_params,
)
from fedsim.privacy import (
    ClippingPostprocessor,
    GaussianCentralMechanism,
    GaussianLocalApproxMechanism,
    LaplaceCentralMechanism,
    Mechanism,
    calibrate_sigma,
)

from .config import RunConfig

METRICS_FILENAME = "metrics.csv"
METADATA_FILENAME = "metadata.json"
CHECKPOINT_FILENAME = "checkpoint.csv"
CSV_HEADER = "iteration,population,metric,value,weight"


class CsvMetricsWriter:
    """Callback streaming metric rows, flushed at every iteration."""

    def __init__(self, stream: TextIO):
        self._stream = stream
        stream.write(CSV_HEADER + "\n")
        stream.flush()

    def __call__(self, params, rows, iteration) -> bool:
        for t, population, metric, value, weight in rows:
            self._stream.write(f"{t},{population},{metric},{value!r},{weight!r}\n")
        self._stream.flush()
        return False


def _synthetic_datasets(config: RunConfig) -> dict[Population, FederatedDataset]:
    # train and val must come from one pool: the generator draws class
    # centers from the seed, so separate pools would be separate problems
    points_per_user = config["data.points_per_user"]
    train_points = config["data.num_users"] * points_per_user
    val_points = config["data.val_users"] * points_per_user
    features, labels = make_synthetic_classification(
        train_points + val_points,
        dim=config["data.dim"],
        num_classes=config["data.num_classes"],
        margin=config["data.margin"],
        seed=derive_seed(config["data.seed"], "pool"),
    )
    if config["data.partition"] == "dirichlet":
        train = partition_dirichlet(
            features[:train_points], labels[:train_points],
            config["data.num_users"], points_per_user,
            alpha=config["data.alpha"],
            seed=derive_seed(config["data.seed"], "train", "split"),
            population=Population.TRAIN, id_prefix="train",
        )
    else:
        train = partition_iid(
            features[:train_points], labels[:train_points], points_per_user,
            seed=derive_seed(config["data.seed"], "train", "split"),
            population=Population.TRAIN, id_prefix="train",
        )
    # validation users stay IID: they estimate the global distribution
    val = partition_iid(
        features[train_points:], labels[train_points:], points_per_user,
        seed=derive_seed(config["data.seed"], "val", "split"),
        population=Population.VAL, id_prefix="val",
    )
    return {Population.TRAIN: train, Population.VAL: val}


def build_datasets(config: RunConfig) -> dict[Population, FederatedDataset]:
    if config["data.source"] == "csv":
        return {
            Population.TRAIN: load_partition(config["data.train_path"], Population.TRAIN),
            Population.VAL: load_partition(config["data.val_path"], Population.VAL),
        }
    return _synthetic_datasets(config)


def build_model(config: RunConfig):
    if config["model.kind"] == "mlp":
        return MLP(
            dim=config["data.dim"],
            hidden_units=config["model.hidden_units"],
            num_classes=config["data.num_classes"],
        )
    return LogisticRegression(
        dim=config["data.dim"], num_classes=config["data.num_classes"]
    )


def _build_optimizer(config: RunConfig):
    lr = config["algorithm.central_learning_rate"]
    if config["algorithm.central_optimizer"] == "adam":
        return AdamOptimizer(
            lr, adaptivity_degree=config["algorithm.adam_adaptivity_degree"]
        )
    return SGDOptimizer(lr)


def build_algorithm(config: RunConfig, model, num_train_users: int):
    local_lr: Any = config["algorithm.local_learning_rate"]
    if config["algorithm.warmup_iterations"] > 0:
        local_lr = HyperParam(
            local_lr, LinearWarmup(config["algorithm.warmup_iterations"])
        )
    kwargs: dict[str, Any] = dict(
        total_iterations=config["run.total_iterations"],
        cohort_size=config["run.cohort_size"],
        local_learning_rate=local_lr,
        local_num_epochs=config["algorithm.local_epochs"],
        local_batch_size=config["algorithm.local_batch_size"],
        eval_frequency=config["run.eval_frequency"],
        eval_cohort_size=config["run.eval_cohort_size"],
        eval_batch_size=config["run.eval_batch_size"],
        run_seed=config["run.seed"],
        init_seed=config["run.init_seed"],
        backend=None if config["run.backend"] == "auto" else config["run.backend"],
    )
    kind = config["algorithm.kind"]
    optimizer = _build_optimizer(config)
    if kind == "scaffold":
        return Scaffold(model, optimizer, num_train_users=num_train_users, **kwargs)
    kwargs["weighting"] = config["algorithm.weighting"]
    if kind == "fedprox":
        return FedProx(model, optimizer, mu=config["algorithm.mu"], **kwargs)
    if kind == "adafedprox":
        return AdaFedProx(model, optimizer, mu=config["algorithm.mu"], **kwargs)
    return FedAvg(model, optimizer, **kwargs)


def build_privacy_pipeline(config: RunConfig) -> tuple[list, dict[str, Any] | None]:
    """Postprocessor pipeline plus the accounting summary for metadata."""
    spec = config.privacy_config()
    if spec is None:
        return [], None
    norm_order = 1.0 if spec.mechanism is Mechanism.LAPLACE_CENTRAL else 2.0
    clip = ClippingPostprocessor(
        spec.clipping_bound, norm_order=norm_order, adaptive=spec.adaptive_clip
    )
    noise_base_seed = derive_seed(
        config["run.seed"], "noise-stream", config["privacy.noise_seed"]
    )
    meta: dict[str, Any] = {
        "mechanism": spec.mechanism.value,
        "clipping_bound": spec.clipping_bound,
        "norm_order": norm_order,
        "adaptive_clip": spec.adaptive_clip is not None,
    }
    if spec.mechanism is Mechanism.GAUSSIAN_CENTRAL:
        if spec.sigma is not None:
            sigma = spec.sigma
            meta.update({"sigma": sigma, "sigma_source": "configured"})
        else:
            calibrated = calibrate_sigma(
                spec.epsilon, spec.delta, spec.q, spec.total_iterations
            )
            sigma = calibrated.sigma
            meta.update(
                {
                    "sigma": sigma,
                    "sigma_source": "calibrated",
                    "achieved_epsilon": calibrated.achieved_epsilon,
                    "optimal_order": calibrated.optimal_order,
                    "target_epsilon": spec.epsilon,
                    "delta": spec.delta,
                    "accounting_iterations": spec.total_iterations,
                }
            )
        meta.update({"q": spec.q, "r": spec.r})
        mechanism = GaussianCentralMechanism(
            clipping=clip, sigma=sigma, r=spec.r, noise_base_seed=noise_base_seed
        )
    elif spec.mechanism is Mechanism.LAPLACE_CENTRAL:
        meta["epsilon_per_query"] = spec.laplace_epsilon_per_query
        mechanism = LaplaceCentralMechanism(
            clipping=clip,
            epsilon_per_query=spec.laplace_epsilon_per_query,
            noise_base_seed=noise_base_seed,
        )
    else:
        meta["local_noise_std"] = spec.local_noise_std or 0.0
        mechanism = GaussianLocalApproxMechanism(
            clipping=clip,
            local_noise_std=spec.local_noise_std or 0.0,
            noise_base_seed=noise_base_seed,
        )
    return [clip, mechanism], meta


def build_engine(config: RunConfig, datasets, postprocessors) -> SimulationEngine:
    return SimulationEngine(
        datasets,
        num_workers=config["run.num_workers"],
        postprocessors=postprocessors,
        base_policy=config["run.base_policy"],
        base_value=config["run.base_value"],
    )


def execute_run(
    config: RunConfig,
    datasets: dict[Population, FederatedDataset],
    out_dir: str | Path,
) -> tuple[SimulationResult, dict[str, Any]]:
    """Run the configured simulation, writing all artifacts to out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    model = build_model(config)
    algorithm = build_algorithm(
        config, model, num_train_users=datasets[Population.TRAIN].num_users
    )
    postprocessors, privacy_meta = build_privacy_pipeline(config)
    engine = build_engine(config, datasets, postprocessors)
    started = time.perf_counter()
    with (out / METRICS_FILENAME).open("w") as stream:
        writer = CsvMetricsWriter(stream)
        result = run_simulation(algorithm, engine, callbacks=[writer])
    total_seconds = time.perf_counter() - started
    save_params(result.params, out / CHECKPOINT_FILENAME)
    metadata = {
        "config": config.as_dict(),
        "backend": config["run.backend"]
        if config["run.backend"] != "auto"
        else default_backend(),
        "scheduler": {
            "policy": config["run.base_policy"],
            "base_value": config["run.base_value"],
            "num_workers": config["run.num_workers"],
        },
        "privacy": privacy_meta,
        "iterations_run": result.iterations_run,
        "iteration_seconds": result.iteration_seconds,
        "total_seconds": total_seconds,
        "cohort_digest": result.cohort_digest,
    }
    with (out / METADATA_FILENAME).open("w") as stream:
        json.dump(metadata, stream, indent=2, sort_keys=True)
        stream.write("\n")
    return result, metadata
