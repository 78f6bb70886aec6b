"""Command-line entry point: ``lagrangeflow run`` and ``lagrangeflow catalog``.

Exit status of ``run``: 0 when every check of every scenario passes, 2 when
some check fails, 1 when a scenario could not be loaded or crashed (the
error's module-qualified code is printed on stderr).
"""
from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .catalog import listing
from .errors import LagrangeFlowError
from .scenario import load_scenario, run_scenario

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CHECK_FAILED = 2


def _run_one(path: str, out: str | None, timing: bool) -> tuple[int, str, str]:
    """Run a single config; returns ``(status, stdout text, stderr text)``."""
    try:
        sc = load_scenario(path)
        report = run_scenario(sc, Path(out) if out else None, timing)
    except LagrangeFlowError as exc:
        return EXIT_ERROR, "", f"{path}: error {exc.code}: {exc}\n"
    except (ValueError, ArithmeticError) as exc:
        return EXIT_ERROR, "", f"{path}: error lagrangeflow.error: {exc}\n"
    lines = [f"scenario {report.scenario} ({report.pipeline}) -> {report.out_dir}"]
    lines += ["  " + c.line() for c in report.checks]
    failed = sum(not c.passed for c in report.checks)
    lines.append(f"  {'ok' if not failed else 'FAILED'}: {len(report.checks) - failed}/{len(report.checks)} checks passed")
    if report.wall_time_s is not None:
        lines.append(f"  wall time {report.wall_time_s:.2f} s")
    return (EXIT_CHECK_FAILED if failed else EXIT_OK), "\n".join(lines) + "\n", ""


def cmd_run(args: argparse.Namespace) -> int:
    jobs = max(1, args.jobs)
    if jobs == 1 or len(args.configs) == 1:
        results = [_run_one(p, args.out, args.timing) for p in args.configs]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_run_one, p, args.out, args.timing) for p in args.configs]
            results = [f.result() for f in futures]
    # printed in config order whatever the completion order
    for _, out, err in results:
        sys.stdout.write(out)
        sys.stderr.write(err)
    statuses = {status for status, _, _ in results}
    if EXIT_ERROR in statuses:
        return EXIT_ERROR
    return EXIT_CHECK_FAILED if EXIT_CHECK_FAILED in statuses else EXIT_OK


def cmd_catalog(args: argparse.Namespace) -> int:
    sys.stdout.write(listing())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lagrangeflow",
        description="Eulerian, Lagrangian flow-map and variational solvers for scalar "
                    "conservation laws, driven by JSON scenario files.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one or more scenario configs")
    run.add_argument("configs", nargs="+", metavar="config.json")
    run.add_argument("--jobs", type=int, default=1, help="scenarios to run in parallel (default 1)")
    run.add_argument("--out", metavar="DIR",
                     help="write artifacts to DIR/<scenario name> (default: the config's output_dir, "
                          "else runs/<scenario name>)")
    run.add_argument("--timing", action="store_true",
                     help="record wall_time_s in report.json (makes reports non-reproducible)")
    run.set_defaults(func=cmd_run)

    cat = sub.add_parser("catalog", help="list built-in fluxes, pressure laws and initial profiles")
    cat.set_defaults(func=cmd_catalog)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
