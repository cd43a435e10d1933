"""Command-line entry point: run experiments, sweep kernel widths, print reports."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .experiment import load_config, run_experiment, run_sweep


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="experiment config (JSON)")
    parser.add_argument("--output-dir", required=True)
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--seed", type=int, default=None,
                        help="override the base seed from the config")


def _load(args) -> "ExperimentConfig":
    config = load_config(args.config)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    return config


def _cmd_run(args) -> int:
    summary = run_experiment(_load(args), args.output_dir, args.workers)
    print(f"{summary['completed']} runs completed, {summary['failed']} failed; "
          f"reports in {args.output_dir}")
    return 0 if summary["failed"] == 0 else 1


def _cmd_sweep(args) -> int:
    config = _load(args)
    sigmas = args.sigmas or config.dataset.get("sigma_sweep") \
        or [0.02, 0.05, 0.1, 0.3, 1.0]
    summary = run_sweep(config, [float(s) for s in sigmas],
                        args.output_dir, args.workers)
    print(f"sweep over {len(sigmas)} widths done, {summary['failed']} failed runs; "
          f"reports in {args.output_dir}")
    return 0 if summary["failed"] == 0 else 1


def _cmd_report(args) -> int:
    path = Path(args.output_dir) / "summary.json"
    if not path.exists():
        print(f"no summary.json under {args.output_dir}", file=sys.stderr)
        return 1
    summary = json.loads(path.read_text())
    cols = ("algorithm", "mode", "completed", "train_error_mean",
            "train_max_violation_mean", "test_error_mean",
            "test_max_violation_mean")
    print("  ".join(f"{c:>26}" for c in cols))
    for row in summary["aggregated"]:
        cells = [row[c] for c in cols]
        print("  ".join(f"{c:>26.4f}" if isinstance(c, float) else f"{c!s:>26}"
                        for c in cells))
    for cmp_row in summary.get("comparison", []):
        gap = cmp_row.get("test_violation_gap")
        if gap is not None:
            print(f"{cmp_row['algorithm']}: one-dataset minus two-dataset "
                  f"test violation = {gap:+.4f}")
    return 0 if summary["failed"] == 0 else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="consplit",
        description="train rate-constrained classifiers with a split-dataset "
                    "multiplier player, and report constraint generalization")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute an experiment grid")
    _add_common(run_p)
    run_p.set_defaults(func=_cmd_run)

    sweep_p = sub.add_parser("sweep", help="repeat a simulated experiment "
                                           "across kernel widths")
    _add_common(sweep_p)
    sweep_p.add_argument("--sigmas", nargs="*", type=float, default=None)
    sweep_p.set_defaults(func=_cmd_sweep)

    report_p = sub.add_parser("report", help="print the aggregated table for a "
                                             "finished experiment")
    report_p.add_argument("--output-dir", required=True)
    report_p.set_defaults(func=_cmd_report)

    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
