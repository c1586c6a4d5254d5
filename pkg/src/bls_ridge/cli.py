"""Command-line interface: ``bls-ridge train`` and ``bls-ridge compare``."""

from __future__ import annotations

import argparse
import sys

from . import data
from .bench import RunReport, compare, format_comparison, load_schedule, run
from .network import TUNERS, BlsConfig
from .solvers import SOLVERS


def _load_datasets(args):
    if args.dataset == "mnist":
        if args.images or args.labels:
            if not (args.images and args.labels):
                raise ValueError("--images and --labels must be given together")
            train = data.load_idx(args.images, args.labels)
        else:
            train = data.load_mnist("train")
        if args.test_images or args.test_labels:
            if not (args.test_images and args.test_labels):
                raise ValueError("--test-images and --test-labels must be given together")
            test = data.load_idx(args.test_images, args.test_labels)
        elif args.images:
            test = None
        else:
            test = data.load_mnist("test")
    elif args.dataset == "csv":
        if not args.images:
            raise ValueError("--images must name the CSV file for --dataset csv")
        full = data.load_csv(args.images, args.label_column, header=args.header)
        train, test = _holdout(full, args)
    else:
        full = data.synth_blobs(args.seed, args.synth_rows, args.synth_dim,
                                args.synth_classes, args.synth_separation)
        train, test = _holdout(full, args)
    if args.train_size:
        train = train.head(min(args.train_size, len(train)))
    if test is not None and args.test_size:
        test = test.head(min(args.test_size, len(test)))
    return train, test


def _holdout(full, args):
    n_test = int(round(args.test_fraction * len(full)))
    if n_test == 0:
        return full, None
    return full.split(len(full) - n_test, seed=args.seed)


def cmd_train(args) -> int:
    schedule = load_schedule(args.schedule)
    config = BlsConfig(solver=args.solver, lam=args.lam, seed=args.seed, scale=args.scale,
                       scale_mode=args.scale_mode, tuner=args.tuner)
    train, test = _load_datasets(args)
    report = run(config, schedule, train, test, reps=args.reps, dataset_name=args.dataset)
    if args.report:
        report.to_json(args.report)
    print(report.to_table())
    return 0


def cmd_compare(args) -> int:
    reports = [RunReport.load(p) for p in args.reports]
    print(format_comparison(compare(reports)))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bls-ridge",
                                description="Incremental broad learning with ridge solvers.")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="run an incremental training schedule")
    t.add_argument("--dataset", choices=["mnist", "csv", "synth"], default="mnist")
    t.add_argument("--images", help="IDX training images (mnist) or CSV file (csv)")
    t.add_argument("--labels", help="IDX training labels (mnist)")
    t.add_argument("--test-images", help="IDX test images (mnist)")
    t.add_argument("--test-labels", help="IDX test labels (mnist)")
    t.add_argument("--label-column", type=int, default=-1, help="CSV label column (default last)")
    t.add_argument("--header", action="store_true", help="CSV has a header row")
    t.add_argument("--test-fraction", type=float, default=0.2,
                   help="held-out fraction for csv and synth data")
    t.add_argument("--train-size", type=int, default=0, help="use only the first N training rows")
    t.add_argument("--test-size", type=int, default=0, help="use only the first N test rows")
    t.add_argument("--synth-rows", type=int, default=2000)
    t.add_argument("--synth-dim", type=int, default=20)
    t.add_argument("--synth-classes", type=int, default=4)
    t.add_argument("--synth-separation", type=float, default=5.0)
    t.add_argument("--solver", choices=sorted(SOLVERS), default="chol")
    t.add_argument("--lambda", dest="lam", type=float, default=1e-8,
                   help="ridge parameter; the generalized-inverse baselines use it as lambda_eps")
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--schedule", default="preset:mnist", help="JSON file or preset:NAME")
    t.add_argument("--scale", type=float, default=0.8)
    t.add_argument("--scale-mode", choices=["max", "fixed"], default="max")
    t.add_argument("--tuner", choices=sorted(TUNERS), default="none")
    t.add_argument("--reps", type=int, default=5)
    t.add_argument("--report", help="write the JSON report here")
    t.set_defaults(func=cmd_train)

    c = sub.add_parser("compare", help="tabulate reports side by side with speedups")
    c.add_argument("--reports", nargs="+", required=True)
    c.set_defaults(func=cmd_compare)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, RuntimeError, MemoryError, KeyError) as exc:
        print(f"bls-ridge: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
