"""Command-line entry points: ``analyze`` and ``bench``."""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from . import __version__
from .bench import CONFIGS, CorpusError, bench, write_csv
from .model import AnalysisConfig
from .pipeline import analyze
from .program import DEFAULT_MAX_PATHS, PathBudgetExceeded, ProgramError
from .report import render_json, render_text
from .rules import RuleError

EXIT_OK = 0
EXIT_FINDINGS = 1
EXIT_PARSE = 2
EXIT_BUDGET = 3


def _on_off(value):
    if value not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected 'on' or 'off'")
    return value == "on"


def build_parser():
    parser = argparse.ArgumentParser(prog="errchains", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="analyze one program against a rule directory")
    a.add_argument("--rules", required=True, type=Path, help="directory of .crule files")
    a.add_argument("--program", required=True, type=Path, help=".mprog file to analyze")
    a.add_argument("--sed", type=_on_off, default=True, metavar="on|off",
                   help="subsequent error detection (default: on)")
    a.add_argument("--bet", type=_on_off, default=False, metavar="on|off",
                   help="backward error tracking; needs --sed on (default: off)")
    a.add_argument("--format", choices=("text", "json"), default="text")
    a.add_argument("--group-chains", action="store_true",
                   help="text output: print subsequent errors beneath their root errors")
    a.add_argument("--timings", action="store_true", help="include phase timings")
    a.add_argument("--fail-on-findings", action="store_true", help="exit 1 when errors are found")
    a.add_argument("--max-paths", type=int, default=DEFAULT_MAX_PATHS)
    a.add_argument("--out", type=Path, help="write the report here instead of stdout")

    b = sub.add_parser("bench", help="time all configurations over a corpus")
    b.add_argument("--rules", required=True, type=Path)
    b.add_argument("--corpus", required=True, type=Path)
    b.add_argument("--reps", type=int, default=10)
    b.add_argument("--configs", default=",".join(CONFIGS),
                   help=f"comma-separated subset of {','.join(CONFIGS)}")
    b.add_argument("--out", required=True, type=Path, help="raw CSV; summary goes next to it")
    return parser


def _write(text, out):
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def cmd_analyze(args) -> int:
    if args.bet and not args.sed:
        print("errchains: --bet on requires --sed on", file=sys.stderr)
        return EXIT_PARSE
    if args.max_paths < 1:
        print("errchains: --max-paths must be positive", file=sys.stderr)
        return EXIT_PARSE
    config = AnalysisConfig(sed_enabled=args.sed, bet_enabled=args.bet, max_paths=args.max_paths,
                            collect_timings=args.timings)
    try:
        report = analyze(args.rules, args.program, config)
    except (RuleError, ProgramError, OSError) as exc:
        print(f"errchains: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except PathBudgetExceeded as exc:
        print(f"errchains: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    start = time.perf_counter()
    if args.format == "json":
        text = render_json(report, include_timings=False)
    else:
        text = render_text(report, args.group_chains)
    if report.timings is not None:
        extra = (time.perf_counter() - start) * 1000.0
        report.timings.reporting_ms += extra
        report.timings.total_ms += extra
        if args.format == "json":
            text = render_json(report)
        else:
            t = report.timings.as_dict()
            text += "\nTimings (ms):\n" + "".join(f"  {k[:-3]}: {v:.3f}\n" for k, v in t.items())
    _write(text, args.out)
    if args.fail_on_findings and report.errors:
        return EXIT_FINDINGS
    return EXIT_OK


def cmd_bench(args) -> int:
    configs = [c.strip() for c in args.configs.split(",") if c.strip()]
    try:
        result = bench(args.rules, args.corpus, args.reps, configs)
    except (CorpusError, RuleError) as exc:
        print(f"errchains: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ValueError as exc:
        print(f"errchains: {exc}", file=sys.stderr)
        return EXIT_PARSE
    summary = write_csv(result, args.out)
    for row in result.summary:
        if row["program"] == "ALL":
            ov = row["overhead_vs_sast_pct"]
            ov = "baseline" if ov is None else f"{ov:+.2f}%"
            print(f"{row['config']:>9}: median total {row['total_median_ms']:.3f} ms ({ov})")
    print(f"wrote {args.out} and {summary}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "analyze":
        return cmd_analyze(args)
    return cmd_bench(args)


if __name__ == "__main__":
    sys.exit(main())
