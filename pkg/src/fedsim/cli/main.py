"""Command-line entry point.

Exit codes for `run` are partitioned by phase: 2 for configuration
problems, 3 for data problems, 4 for runtime failures.
"""

from __future__ import annotations

import argparse
import sys
from typing import Sequence

from fedsim.errors import (
    ConfigError,
    DataError,
    FedsimError,
    InsufficientData,
    TooFewPoints,
    Unachievable,
)
from fedsim.privacy import calibrate_sigma

from .bench import SCHEDULE_POLICIES, bench_kernels, bench_schedule
from .config import parse_config
from .runner import build_datasets, execute_run

EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_RUNTIME = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fedsim",
        description="Private federated learning simulator.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a simulation from a config file")
    run.add_argument("config", help="path to a `key = value` config file")
    run.add_argument(
        "--set", dest="overrides", action="append", default=[],
        metavar="KEY=VALUE", help="override a config key (repeatable)",
    )
    run.add_argument("--workers", type=int, help="override run.num_workers")
    run.add_argument("--seed", type=int, help="override run.seed")
    run.add_argument("--out", help="override run.output_dir")

    bench = sub.add_parser(
        "bench-schedule", help="compare straggler time across scheduling policies"
    )
    bench.add_argument("--users", type=int, default=40)
    bench.add_argument("--trials", type=int, default=100)
    bench.add_argument(
        "--workers", type=int, nargs="+", default=[1, 2, 4, 10],
        help="worker counts to benchmark",
    )
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--lognormal-mean", type=float, default=3.0)
    bench.add_argument("--lognormal-sigma", type=float, default=1.0)
    bench.add_argument("--out", help="write the CSV here instead of stdout")

    account = sub.add_parser(
        "account", help="calibrate the noise multiplier for a privacy budget"
    )
    account.add_argument("--epsilon", type=float, required=True)
    account.add_argument("--delta", type=float, required=True)
    account.add_argument("--q", type=float, required=True, help="sampling rate")
    account.add_argument("--steps", type=int, required=True, help="iterations T")

    kernels = sub.add_parser(
        "bench-kernels", help="time the local SGD kernels on each backend"
    )
    kernels.add_argument("--points", type=int, default=50)
    kernels.add_argument("--dim", type=int, default=32)
    kernels.add_argument("--classes", type=int, default=10)
    kernels.add_argument("--hidden", type=int, default=64)
    kernels.add_argument("--batch", type=int, default=10)
    kernels.add_argument("--epochs", type=int, default=5)
    kernels.add_argument("--repeats", type=int, default=30)
    kernels.add_argument("--seed", type=int, default=0)
    return parser


def _cmd_run(args: argparse.Namespace) -> int:
    overrides = list(args.overrides)
    if args.workers is not None:
        overrides.append(f"run.num_workers={args.workers}")
    if args.seed is not None:
        overrides.append(f"run.seed={args.seed}")
    try:
        config = parse_config(args.config, overrides)
    except ConfigError as exc:
        print(f"config error:\n{exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        datasets = build_datasets(config)
    except (DataError, TooFewPoints, InsufficientData) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    out_dir = args.out if args.out is not None else config["run.output_dir"]
    try:
        result, metadata = execute_run(config, datasets, out_dir)
    except (FedsimError, ValueError, OSError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(
        f"completed {result.iterations_run} iterations in "
        f"{metadata['total_seconds']:.2f}s; outputs in {out_dir}"
    )
    return 0


def _cmd_bench_schedule(args: argparse.Namespace) -> int:
    try:
        header, rows = bench_schedule(
            num_users=args.users,
            worker_counts=args.workers,
            trials=args.trials,
            seed=args.seed,
            lognormal_mean=args.lognormal_mean,
            lognormal_sigma=args.lognormal_sigma,
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join([str(int(row[0])), *[repr(v) for v in row[1:]]]))
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
        print(f"wrote {args.out}")
    else:
        print(text, end="")
    return 0


def _cmd_account(args: argparse.Namespace) -> int:
    try:
        result = calibrate_sigma(args.epsilon, args.delta, args.q, args.steps)
    except Unachievable as exc:
        print(f"unachievable: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"sigma = {result.sigma!r}")
    print(f"achieved_epsilon = {result.achieved_epsilon!r}")
    print(f"optimal_order = {result.optimal_order!r}")
    return 0


def _cmd_bench_kernels(args: argparse.Namespace) -> int:
    timings = bench_kernels(
        num_points=args.points,
        dim=args.dim,
        num_classes=args.classes,
        hidden_units=args.hidden,
        batch_size=args.batch,
        num_epochs=args.epochs,
        repeats=args.repeats,
        seed=args.seed,
    )
    baseline = {
        t.model: t.seconds_per_fit for t in timings if t.backend == "numpy"
    }
    print("backend,model,seconds_per_fit,speedup_vs_numpy")
    for t in timings:
        speedup = baseline[t.model] / t.seconds_per_fit if t.seconds_per_fit else 0.0
        print(f"{t.backend},{t.model},{t.seconds_per_fit:.6f},{speedup:.2f}")
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "bench-schedule":
        return _cmd_bench_schedule(args)
    if args.command == "account":
        return _cmd_account(args)
    return _cmd_bench_kernels(args)


if __name__ == "__main__":
    sys.exit(main())
