"""Command line entry point: ``maxk verify | run | report``.

Exit codes: 0 success, 1 property failure, 2 config error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from maxk.errors import ConfigError, ReportError

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


def cmd_verify(args) -> int:
    from maxk.verify import run_all

    results = run_all(max_n=args.max_n, batches=args.batches)
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        extra = f"  {r.detail}" if r.detail else ""
        print(f"[{status}] {r.name}: worst={r.worst:.3e} tol={r.tolerance:.1e} "
              f"({r.seconds:.1f}s){extra}")
        if not r.passed and r.counterexample is not None:
            print("  counterexample: " + json.dumps(r.counterexample))
    failed = [r.name for r in results if not r.passed]
    if failed:
        print(f"{len(failed)} propert{'y' if len(failed) == 1 else 'ies'} failed: "
              + "; ".join(failed))
        return EXIT_FAIL
    print(f"all {len(results)} properties passed (max n = {args.max_n})")
    return EXIT_OK


def cmd_run(args) -> int:
    from maxk.experiment import ExperimentSpec, run_grid

    spec = ExperimentSpec.from_json(args.spec)
    if args.seed:
        spec.seeds = [int(s) for s in args.seed]
    summary = run_grid(spec, out=args.out, jobs=args.jobs)
    out = Path(args.out if args.out else spec.output)
    failures = [rid for rid, e in summary.items() if e["failure"]]
    print(f"{len(summary)} runs written to {out}")
    if args.svg:
        from maxk.experiment import write_svg

        write_svg(sorted((out / "traces").glob("*.csv")), out / "max_at_k.svg")
    if failures:
        print("numerical failures: " + ", ".join(failures), file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_report(args) -> int:
    from maxk.experiment import build_report, load_summaries

    summary = load_summaries(args.summaries)
    report = build_report(summary, metric=args.metric,
                          alternative="greater" if args.one_sided else "two-sided")
    md = report.to_markdown()
    print(md, end="")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.md").write_text(md)
        (out / "report.csv").write_text(report.to_csv())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="maxk", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="run the oracle-equivalence property suite")
    p.add_argument("--max-n", type=int, default=10)
    p.add_argument("--batches", type=int, default=200_000,
                   help="Monte Carlo batches for the unbiasedness check")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("run", help="run an (environment x objective x seed) grid")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", default=None, help="output directory (overrides the spec)")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", nargs="+", default=None, help="override the spec's seed list")
    p.add_argument("--svg", action="store_true", help="also render max@k vs step as SVG")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("report", help="compare methods from one or more summary.json files")
    p.add_argument("summaries", nargs="+")
    p.add_argument("--out", default=None)
    p.add_argument("--metric", default="exact_max_at_k")
    p.add_argument("--one-sided", action="store_true")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (ConfigError, ReportError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
