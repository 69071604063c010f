"""Command line entry point.

Exit codes: 0 success, 2 constraint or configuration error, 3 numerical
failure.
"""

import argparse
import json
import sys
from pathlib import Path

from .errors import (
    BlowUpError,
    ConfigurationError,
    ConstraintError,
    CutoffError,
    DomainError,
    FormatError,
    GNSError,
    LadderError,
    NonContractionError,
    ResolutionError,
    StructuralError,
)
from .experiment import STAGES, emit_report, load_config, load_report, merge_reports, run_pipeline

EXIT_OK, EXIT_CONSTRAINT, EXIT_NUMERICAL = 0, 2, 3
CONSTRAINT_ERRORS = (ConstraintError, ConfigurationError, DomainError, StructuralError, FormatError)
NUMERICAL_ERRORS = (LadderError, ResolutionError, BlowUpError, NonContractionError, CutoffError)


def exit_code(exc):
    if isinstance(exc, CONSTRAINT_ERRORS):
        return EXIT_CONSTRAINT
    if isinstance(exc, NUMERICAL_ERRORS):
        return EXIT_NUMERICAL
    return EXIT_NUMERICAL


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="flat key = value configuration file")
    common.add_argument("--out", type=Path, help="output directory (overrides outputs.dir)")
    common.add_argument("--grid", type=int, help="grid size n (overrides grid.n)")
    common.add_argument("--override", action="append", default=[], metavar="KEY=VALUE", help="configuration override, repeatable")

    p = argparse.ArgumentParser(prog="gnstorus", description="Two-branch construction pipeline on the two-torus.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in STAGES:
        s = sub.add_parser(name, parents=[common], help=f"run the {name} stage and its dependencies")
        s.add_argument("--stage", default=name, choices=STAGES + ("all",), help="stage to run (default: the subcommand)")
    r = sub.add_parser("report", parents=[common], help="run a stage (default all) or re-emit an existing report")
    r.add_argument("--stage", default=None, choices=STAGES + ("all",), help="run this stage first; without it the report in --out is re-emitted")
    r.add_argument("--format", action="append", choices=("json", "csv_tables", "plot_data"), help="report formats (default: all three)")
    r.add_argument("--compare", action="append", type=Path, default=[], metavar="DIR", help="merge Y^alpha columns of other run directories")
    return p


def _config(args):
    overrides = list(args.override)
    if args.out is not None:
        overrides.append(f"outputs.dir={args.out}")
    if args.grid is not None:
        overrides.append(f"grid.n={args.grid}")
    return load_config(args.config, overrides)


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        cfg = _config(args)
        if args.command == "report":
            if args.stage:
                report = run_pipeline(cfg, args.stage)
            else:
                report = load_report(cfg.outputs / "report.json")
            written = []
            for fmt in args.format or ("json", "csv_tables", "plot_data"):
                written += emit_report(report, fmt, cfg.outputs)
            if args.compare:
                runs = [report] + [load_report(d / "report.json") for d in args.compare]
                labels = [str(cfg.outputs)] + [str(d) for d in args.compare]
                written.append(merge_reports(runs, labels, cfg.outputs / "comparison.csv"))
            for w in written:
                print(w)
            return EXIT_OK
        report = run_pipeline(cfg, args.stage)
        emit_report(report, "csv_tables", cfg.outputs)
        emit_report(report, "plot_data", cfg.outputs)
        summary = {"stages": report.stages, "config_hash": report.provenance["config_hash"], "out": str(cfg.outputs)}
        if report.checks:
            summary["checks_passed"] = report.all_checks_pass
        print(json.dumps(summary))
        if args.command == "verify" and not report.all_checks_pass:
            failed = [k for k, c in report.checks.items() if not c["passed"]]
            print(f"failed checks: {', '.join(failed)}", file=sys.stderr)
            return EXIT_NUMERICAL
        return EXIT_OK
    except GNSError as exc:
        stage = getattr(exc, "stage", None)
        where = f"stage {stage}: " if stage else ""
        print(f"error: {where}{type(exc).__name__}: {exc}", file=sys.stderr)
        return exit_code(exc)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONSTRAINT


if __name__ == "__main__":
    sys.exit(main())
