"""Line-based run configuration: `key = value` with dotted prefixes.

A config file is a flat list of assignments; a `preset = name` line
fills defaults from a named benchmark recipe, file lines override the
preset, and `--set key=value` overrides the file.  Everything is
validated up front and every problem is reported at once, with the
line (or override) it came from.
"""

from __future__ import annotations

import difflib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping

from fedsim.engine import BASE_POLICIES
from fedsim.errors import ConfigError
from fedsim.privacy import AdaptiveClipConfig, Mechanism, PrivacyConfig


def _int(text: str) -> int:
    return int(text)


def _float(text: str) -> float:
    return float(text)


def _str(text: str) -> str:
    return text


def _bool(text: str) -> bool:
    lowered = text.lower()
    if lowered in ("true", "yes", "1"):
        return True
    if lowered in ("false", "no", "0"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _choice(*options: str) -> Callable[[str], str]:
    def parse(text: str) -> str:
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}; got {text!r}")
        return text

    return parse


def _optional_float(text: str) -> float | None:
    if text.lower() == "none":
        return None
    return float(text)


@dataclass(frozen=True)
class _Key:
    parse: Callable[[str], Any]
    default: Any
    doc: str


SCHEMA: dict[str, _Key] = {
    "run.seed": _Key(_int, 0, "root seed for cohort sampling"),
    "run.init_seed": _Key(_int, 0, "seed for model initialization"),
    "run.total_iterations": _Key(_int, 100, "central iterations T"),
    "run.cohort_size": _Key(_int, 10, "training users per iteration C"),
    "run.eval_frequency": _Key(_int, 10, "evaluate every this many iterations"),
    "run.eval_cohort_size": _Key(_int, 10, "validation users per evaluation"),
    "run.eval_batch_size": _Key(_int, 0, "evaluation batch size (0 = full)"),
    "run.num_workers": _Key(_int, 1, "parallel worker count"),
    "run.base_policy": _Key(_choice(*BASE_POLICIES), "median", "scheduler base weight policy"),
    "run.base_value": _Key(_float, 0.0, "base weight when policy is fixed"),
    "run.backend": _Key(_choice("auto", "numba", "numpy"), "auto", "compute kernel backend"),
    "run.output_dir": _Key(_str, "runs", "directory for metrics/metadata/checkpoint"),
    "data.source": _Key(_choice("synthetic", "csv"), "synthetic", "where user data comes from"),
    "data.train_path": _Key(_str, "", "training partition CSV (source = csv)"),
    "data.val_path": _Key(_str, "", "validation partition CSV (source = csv)"),
    "data.num_users": _Key(_int, 100, "synthetic training users"),
    "data.val_users": _Key(_int, 20, "synthetic validation users"),
    "data.points_per_user": _Key(_int, 50, "datapoints per user"),
    "data.dim": _Key(_int, 32, "feature dimension"),
    "data.num_classes": _Key(_int, 10, "number of classes"),
    "data.margin": _Key(_float, 2.0, "minimum distance between class centers"),
    "data.partition": _Key(_choice("iid", "dirichlet"), "iid", "how users split the pool"),
    "data.alpha": _Key(_float, 0.1, "Dirichlet concentration for non-IID splits"),
    "data.seed": _Key(_int, 0, "seed for data generation and partitioning"),
    "model.kind": _Key(_choice("logistic", "mlp"), "logistic", "built-in model"),
    "model.hidden_units": _Key(_int, 64, "hidden layer width (mlp)"),
    "algorithm.kind": _Key(
        _choice("fedavg", "fedprox", "adafedprox", "scaffold"), "fedavg",
        "federated algorithm",
    ),
    "algorithm.local_learning_rate": _Key(_float, 0.1, "client SGD learning rate"),
    "algorithm.local_epochs": _Key(_int, 1, "client epochs per iteration"),
    "algorithm.local_batch_size": _Key(_int, 10, "client batch size"),
    "algorithm.weighting": _Key(
        _choice("datapoints", "uniform"), "datapoints", "delta averaging weights",
    ),
    "algorithm.mu": _Key(_float, 0.01, "proximal strength (fedprox/adafedprox)"),
    "algorithm.central_optimizer": _Key(_choice("sgd", "adam"), "sgd", "server optimizer"),
    "algorithm.central_learning_rate": _Key(_float, 1.0, "server learning rate"),
    "algorithm.warmup_iterations": _Key(_int, 0, "linear warmup of the local lr (0 = off)"),
    "algorithm.adam_adaptivity_degree": _Key(_float, 0.1, "adam denominator offset"),
    "privacy.mechanism": _Key(
        _choice("none", "gaussian", "laplace", "gaussian_local_approx"), "none",
        "noise mechanism",
    ),
    "privacy.clipping_bound": _Key(_float, 1.0, "norm bound S on user statistics"),
    "privacy.epsilon": _Key(_float, 2.0, "target epsilon over the accounting horizon"),
    "privacy.delta": _Key(_float, 1e-6, "target delta"),
    "privacy.noise_cohort_size": _Key(_int, 0, "deployment cohort size C-tilde"),
    "privacy.population": _Key(_int, 0, "deployment population M"),
    "privacy.total_iterations": _Key(_int, 0, "accounting horizon (0 = run.total_iterations)"),
    "privacy.sigma": _Key(_optional_float, None, "noise multiplier override (none = calibrate)"),
    "privacy.laplace_epsilon_per_query": _Key(_float, 1.0, "per-iteration epsilon (laplace)"),
    "privacy.local_noise_std": _Key(_float, 0.0, "per-user noise std (gaussian_local_approx)"),
    "privacy.adaptive_clip": _Key(_bool, False, "adapt the clipping bound to a quantile"),
    "privacy.adaptive_quantile": _Key(_float, 0.5, "target clipped fraction"),
    "privacy.adaptive_learning_rate": _Key(_float, 0.2, "adaptation speed"),
    "privacy.noise_seed": _Key(_int, 0, "extra seed folded into the noise stream"),
}

_IID_PRESET = {
    "run.total_iterations": 1500,
    "run.cohort_size": 50,
    "run.eval_frequency": 10,
    "run.eval_cohort_size": 100,
    "data.num_users": 1000,
    "data.val_users": 100,
    "data.points_per_user": 50,
    "data.dim": 32,
    "data.num_classes": 10,
    "data.margin": 6.0,
    "data.partition": "iid",
    "algorithm.kind": "fedavg",
    "algorithm.local_learning_rate": 0.1,
    "algorithm.local_epochs": 1,
    "algorithm.local_batch_size": 10,
    "algorithm.central_optimizer": "sgd",
    "algorithm.central_learning_rate": 1.0,
}

_DIRICHLET_PRESET = dict(_IID_PRESET)
_DIRICHLET_PRESET.update({"data.partition": "dirichlet", "data.alpha": 0.1})

_DP_PRESET = dict(_DIRICHLET_PRESET)
_DP_PRESET.update(
    {
        # uniform weighting keeps each contribution at delta scale, so
        # the 0.4 bound clips geometry rather than datapoint counts
        "algorithm.weighting": "uniform",
        "privacy.mechanism": "gaussian",
        "privacy.clipping_bound": 0.4,
        "privacy.epsilon": 2.0,
        "privacy.delta": 1e-6,
        "privacy.noise_cohort_size": 1000,
        "privacy.population": 1_000_000,
    }
)

PRESETS: dict[str, dict[str, Any]] = {
    "cifar10-iid-like": _IID_PRESET,
    "cifar10-dirichlet-like": _DIRICHLET_PRESET,
    "cifar10-dp-like": _DP_PRESET,
}


@dataclass(frozen=True)
class RunConfig:
    """Fully-resolved, validated configuration for one run."""

    values: Mapping[str, Any]
    preset: str | None = None
    explicit: frozenset[str] = field(default_factory=frozenset)

    def __getitem__(self, key: str) -> Any:
        return self.values[key]

    def as_dict(self) -> dict[str, Any]:
        """Complete resolved mapping, for the metadata echo."""
        out: dict[str, Any] = {"preset": self.preset}
        out.update(sorted(self.values.items()))
        return out

    def privacy_config(self) -> PrivacyConfig | None:
        """Typed privacy spec, or None when the mechanism is none."""
        mechanism = Mechanism(self["privacy.mechanism"])
        if mechanism is Mechanism.NONE:
            return None
        adaptive = None
        if self["privacy.adaptive_clip"]:
            adaptive = AdaptiveClipConfig(
                quantile=self["privacy.adaptive_quantile"],
                learning_rate=self["privacy.adaptive_learning_rate"],
            )
        horizon = self["privacy.total_iterations"] or self["run.total_iterations"]
        return PrivacyConfig(
            mechanism=mechanism,
            epsilon=self["privacy.epsilon"],
            delta=self["privacy.delta"],
            population=self["privacy.population"],
            cohort_size=self["run.cohort_size"],
            noise_cohort_size=self["privacy.noise_cohort_size"],
            clipping_bound=self["privacy.clipping_bound"],
            total_iterations=horizon,
            adaptive_clip=adaptive,
            sigma=self["privacy.sigma"],
            laplace_epsilon_per_query=self["privacy.laplace_epsilon_per_query"],
            local_noise_std=self["privacy.local_noise_std"] or None,
        )


def _split_assignment(text: str, provenance: str, problems: list[str]):
    body = text.split("#", 1)[0].strip()
    if not body:
        return None
    if "=" not in body:
        problems.append(f"{provenance}: expected 'key = value', got {text.strip()!r}")
        return None
    key, raw = body.split("=", 1)
    return key.strip(), raw.strip()


def _suggest(key: str) -> str:
    candidates = list(SCHEMA) + ["preset"]
    close = difflib.get_close_matches(key, candidates, n=1)
    return f"; nearest is {close[0]!r}" if close else ""


def _cross_validate(values: dict[str, Any], explicit: set[str], problems: list[str]):
    positive = [
        "run.cohort_size", "run.eval_frequency", "run.eval_cohort_size",
        "run.num_workers", "data.num_users", "data.val_users",
        "data.points_per_user", "data.dim", "model.hidden_units",
        "algorithm.local_batch_size",
    ]
    for key in positive:
        if values[key] < 1:
            problems.append(f"{key} must be >= 1, got {values[key]}")
    nonnegative = [
        "run.total_iterations", "algorithm.local_epochs", "algorithm.mu",
        "algorithm.warmup_iterations", "algorithm.local_learning_rate",
        "run.base_value", "privacy.local_noise_std",
    ]
    for key in nonnegative:
        if values[key] < 0:
            problems.append(f"{key} must be >= 0, got {values[key]}")
    if values["data.num_classes"] < 2:
        problems.append(f"data.num_classes must be >= 2, got {values['data.num_classes']}")
    if values["data.source"] == "csv":
        for key in ("data.train_path", "data.val_path"):
            if not values[key]:
                problems.append(f"{key} is required when data.source = csv")
    elif values["data.partition"] == "dirichlet" and values["data.alpha"] <= 0:
        problems.append(f"data.alpha must be > 0, got {values['data.alpha']}")
    if (
        values["algorithm.kind"] == "scaffold"
        and "algorithm.weighting" in explicit
        and values["algorithm.weighting"] != "uniform"
    ):
        problems.append("algorithm.weighting must be uniform for scaffold")


def resolve_config(
    assignments: Iterable[tuple[str, str, str]],
    problems: list[str] | None = None,
) -> RunConfig:
    """Merge (provenance, key, raw-value) assignments over the schema.

    Raises ConfigError listing every problem found (including any the
    caller already collected); never partially succeeds.
    """
    problems = list(problems or [])
    preset_name: str | None = None
    parsed: list[tuple[str, str, Any]] = []
    for provenance, key, raw in assignments:
        if key == "preset":
            if raw not in PRESETS:
                problems.append(
                    f"{provenance}: unknown preset {raw!r}; expected one of "
                    + ", ".join(sorted(PRESETS))
                )
            else:
                preset_name = raw
            continue
        spec = SCHEMA.get(key)
        if spec is None:
            problems.append(f"{provenance}: unknown key {key!r}{_suggest(key)}")
            continue
        try:
            parsed.append((provenance, key, spec.parse(raw)))
        except ValueError as exc:
            problems.append(f"{provenance}: {key}: {exc}")

    values = {key: spec.default for key, spec in SCHEMA.items()}
    if preset_name is not None:
        values.update(PRESETS[preset_name])
    explicit = {key for _, key, _ in parsed}
    for _, key, value in parsed:
        values[key] = value

    _cross_validate(values, explicit, problems)
    try:
        RunConfig(values=values).privacy_config()
    except ValueError as exc:
        problems.append(f"privacy: {exc}")
    if problems:
        raise ConfigError(problems)
    return RunConfig(
        values=values, preset=preset_name, explicit=frozenset(explicit)
    )


def parse_config(path: str | Path, overrides: Iterable[str] = ()) -> RunConfig:
    """Parse a config file plus `key=value` override strings."""
    problems: list[str] = []
    assignments: list[tuple[str, str, str]] = []
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ConfigError([f"cannot read config: {exc}"]) from exc
    for lineno, line in enumerate(lines, start=1):
        pair = _split_assignment(line, f"line {lineno}", problems)
        if pair is not None:
            assignments.append((f"line {lineno}", *pair))
    for override in overrides:
        pair = _split_assignment(override, f"--set {override!r}", problems)
        if pair is not None:
            assignments.append((f"--set {override!r}", *pair))
    return resolve_config(assignments, problems)
