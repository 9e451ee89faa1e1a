"""Command-line entry point: run an experiment plan, emit reports.

    exwave run plan.cfg --out results --format both --threads 2
    exwave --list-experiments

Exit codes: 0 all experiments passed, 1 at least one failed or errored,
2 configuration problem.  EXWAVE_OUT_DIR and EXWAVE_THREADS override the
corresponding flags.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .config import ConfigError, load_config
from .experiments import REGISTRY_WITH_PROBES
from .report import emit_csv, emit_json, run_suite


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="exwave",
        description="Resolvent-based wave decay experiment suite")
    parser.add_argument("--list-experiments", action="store_true",
                        help="print the experiment registry and exit")
    sub = parser.add_subparsers(dest="command")
    run = sub.add_parser("run", help="run a plan file")
    run.add_argument("config", help="path to the plan (key-value sections)")
    run.add_argument("--out", default=None, help="output directory")
    run.add_argument("--format", choices=("csv", "json", "both"),
                     default="both")
    run.add_argument("--threads", type=int, default=None,
                     help="experiment worker threads")
    run.add_argument("--no-plots", action="store_true",
                     help="skip figure rendering")
    return parser


def _list_experiments() -> None:
    for name, fn in REGISTRY_WITH_PROBES.items():
        doc = (fn.__doc__ or "").strip().splitlines()
        summary = doc[0] if doc else ""
        print(f"{name:24s} {summary}")


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.list_experiments:
        _list_experiments()
        return 0
    if args.command != "run":
        parser.print_help()
        return 2

    try:
        plan = load_config(args.config)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2

    out_dir = Path(args.out or os.environ.get("EXWAVE_OUT_DIR", "exwave-out"))
    threads = args.threads
    if threads is None:
        threads = int(os.environ.get("EXWAVE_THREADS", "1"))
    if threads < 1:
        print("configuration error: --threads must be >= 1", file=sys.stderr)
        return 2

    bundle = run_suite(plan, threads=threads)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.format in ("csv", "both"):
        emit_csv(bundle, out_dir / "report.csv")
    if args.format in ("json", "both"):
        emit_json(bundle, out_dir / "report.json")
    if not args.no_plots and bundle.rows:
        from .plots import render_figures

        render_figures(bundle, out_dir / "figures")

    for name, ok in bundle.passes().items():
        note = bundle.errors.get(name, "")
        print(f"{name:24s} {'PASS' if ok else 'FAIL'} {note}")
    if not plan.experiments:
        print("plan ran no experiments")
        return 0
    return 0 if bundle.all_passed else 1


if __name__ == "__main__":
    sys.exit(main())
