"""Command-line interface.

Commands:
    run            one process run; writes checkpoints.csv, edges.log, summary.json
    sweep          a grid of runs over n and seeds; writes sweep.csv + aggregates
    audit          a run with ground-truth audits at every checkpoint
    pattern-check  validate pattern files

Exit codes: 0 success, 1 usage error, 2 invariant or audit failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .harness import (
    DEFAULT_PLACEMENT_SAMPLES,
    DEFAULT_SEED,
    DEFAULT_Y_SAMPLES,
    RunConfig,
    audit_run,
    cmd_run,
    parse_stop,
    sweep,
    write_sweep_files,
)
from .patterns import PatternError, load_pattern_file
from .process import SizingError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FAILURE = 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise _UsageError(message)


def _add_common_run_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--n", type=int, required=True, help="vertex count (>= 2)")
    parser.add_argument(
        "--seed",
        type=int,
        default=DEFAULT_SEED,
        help=f"base RNG seed (default {DEFAULT_SEED}, fixed, never time-based)",
    )
    parser.add_argument(
        "--stop",
        default="saturation",
        help="saturation | steps:K | horizon:X (multiple of the tracking horizon)",
    )
    parser.add_argument(
        "--checkpoint-every",
        type=int,
        default=None,
        metavar="K",
        help="checkpoint cadence in steps (default: ceil(horizon/50))",
    )
    parser.add_argument(
        "--y-samples",
        type=int,
        default=DEFAULT_Y_SAMPLES,
        metavar="K",
        help="open pairs sampled per checkpoint",
    )
    parser.add_argument(
        "--pattern",
        action="append",
        default=[],
        metavar="FILE",
        help="pattern file to monitor (repeatable)",
    )
    parser.add_argument(
        "--pattern-until-horizon",
        action="store_true",
        help="stop searching for pattern copies past the tracking horizon "
        "(recommended for dense patterns on long runs)",
    )
    parser.add_argument(
        "--placement-samples",
        type=int,
        default=DEFAULT_PLACEMENT_SAMPLES,
        metavar="K",
        help="random placements classified at the horizon per pattern",
    )
    parser.add_argument(
        "--record-frozen-y",
        action="store_true",
        help="record each edge's partial set at insertion time",
    )
    parser.add_argument(
        "--out", default="trifree_out", metavar="DIR", help="output directory"
    )


def build_parser() -> _Parser:
    parser = _Parser(prog="trifree", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="single simulation run")
    _add_common_run_flags(run_p)

    sweep_p = sub.add_parser("sweep", help="grid of runs over n values and seeds")
    sweep_p.add_argument(
        "--n",
        type=int,
        action="append",
        required=True,
        metavar="N",
        help="vertex count (repeat for several)",
    )
    sweep_p.add_argument("--seeds-per-n", type=int, default=10, metavar="K")
    sweep_p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    sweep_p.add_argument("--stop", default="saturation")
    sweep_p.add_argument("--checkpoint-every", type=int, default=None, metavar="K")
    sweep_p.add_argument("--y-samples", type=int, default=DEFAULT_Y_SAMPLES)
    sweep_p.add_argument(
        "--pattern", action="append", default=[], metavar="FILE",
        help="pattern file to monitor in every run (repeatable)",
    )
    sweep_p.add_argument("--pattern-until-horizon", action="store_true")
    sweep_p.add_argument("--jobs", type=int, default=1, help="parallel workers")
    sweep_p.add_argument("--out", default="trifree_out", metavar="DIR")

    audit_p = sub.add_parser("audit", help="run with ground-truth audits")
    audit_p.add_argument("--n", type=int, required=True)
    audit_p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    audit_p.add_argument("--stop", default="saturation")
    audit_p.add_argument("--checkpoint-every", type=int, default=None, metavar="K")
    audit_p.add_argument(
        "--oracle",
        action="store_true",
        help="also compare against the permutation-ordering reference (n <= 5)",
    )
    audit_p.add_argument("--trials", type=int, default=100_000)
    audit_p.add_argument("--tv-threshold", type=float, default=0.02)

    check_p = sub.add_parser("pattern-check", help="validate pattern files")
    check_p.add_argument("files", nargs="+", metavar="FILE")

    return parser


def _do_run(args: argparse.Namespace) -> int:
    config = RunConfig(
        n=args.n,
        seed=args.seed,
        stop=parse_stop(args.stop),
        checkpoint_every=args.checkpoint_every,
        y_sample_count=args.y_samples,
        patterns=tuple(args.pattern),
        record_frozen_y=args.record_frozen_y,
        placement_samples=args.placement_samples,
        pattern_until_horizon=args.pattern_until_horizon,
    )
    summary = cmd_run(config, Path(args.out))
    print(json.dumps(summary.to_dict(), indent=2, sort_keys=True))
    return EXIT_OK


def _do_sweep(args: argparse.Namespace) -> int:
    template = RunConfig(
        n=max(args.n),
        seed=args.seed,
        stop=parse_stop(args.stop),
        checkpoint_every=args.checkpoint_every,
        y_sample_count=args.y_samples,
        patterns=tuple(args.pattern),
        pattern_until_horizon=args.pattern_until_horizon,
    )
    rows, aggregates = sweep(args.n, args.seeds_per_n, template, jobs=args.jobs)
    path = write_sweep_files(rows, aggregates, Path(args.out))
    errors = sum(1 for row in rows if row["status"] != "ok")
    print(f"wrote {len(rows)} rows to {path} ({errors} run errors)")
    for entry in aggregates:
        print(json.dumps(entry, sort_keys=True))
    return EXIT_OK


def _do_audit(args: argparse.Namespace) -> int:
    config = RunConfig(
        n=args.n,
        seed=args.seed,
        stop=parse_stop(args.stop),
        checkpoint_every=args.checkpoint_every,
    )
    outcome = audit_run(
        config,
        oracle=args.oracle,
        trials=args.trials,
        tv_threshold=args.tv_threshold,
    )
    print(f"audits run: {outcome.audits}")
    for step, report in outcome.failures:
        print(f"audit FAILED at step {step}:")
        for u, v, stored, actual in report.discrepancies[:20]:
            print(f"  pair ({u}, {v}): stored {stored.name}, recomputed {actual.name}")
        for u, v, w in report.triangles[:20]:
            print(f"  triangle on ({u}, {v}, {w})")
        if not report.open_count_consistent:
            print("  open-pair count disagrees with the status store")
    if outcome.tv_distance is not None:
        verdict = "ok" if outcome.tv_distance <= outcome.tv_threshold else "FAILED"
        print(
            f"permutation-ordering TV distance: {outcome.tv_distance:.5f} "
            f"(threshold {outcome.tv_threshold}) {verdict}"
        )
    if outcome.ok:
        print("audit clean")
        return EXIT_OK
    return EXIT_FAILURE


def _do_pattern_check(args: argparse.Namespace) -> int:
    status = EXIT_OK
    for path in args.files:
        try:
            pattern = load_pattern_file(path)
        except (OSError, PatternError) as err:
            print(f"{path}: INVALID: {err}")
            status = EXIT_USAGE
        else:
            print(
                f"{path}: ok k={pattern.k} e={pattern.e} "
                f"dense={'yes' if pattern.dense_flag else 'no'}"
            )
    return status


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as err:
        print(f"usage error: {err}", file=sys.stderr)
        return EXIT_USAGE
    try:
        if args.command == "run":
            return _do_run(args)
        if args.command == "sweep":
            return _do_sweep(args)
        if args.command == "audit":
            return _do_audit(args)
        if args.command == "pattern-check":
            return _do_pattern_check(args)
    except (ValueError, SizingError, PatternError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    raise AssertionError(f"unhandled command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())
