"""Command-line interface.

Subcommands::

    evosample run      one experiment (repeated FI vs HOF runs) -> JSON report
    evosample bench    a grid of experiments -> one report per cell + summary table
    evosample synth    write a synthetic regression CSV
    evosample selftest deterministic invariant suite

Every ``run`` flag may also come from ``--config FILE`` (YAML or JSON, flat
keys in snake_case or kebab-case); flags given on the command line win.

Report documents follow ``schemas/report.schema.json``: ``tool``, ``spec``
(every resolved parameter, defaults included), ``dataset``, ``runs`` (one
entry per run with FI/HOF test MSE and fitness values), ``aggregate`` (null
for a single run) and ``wall_clock_seconds``. Individuals written with
``--dump-individuals`` follow ``schemas/individual.schema.json``: a fitness
and a list of members, each with ``bag``, ``features``, ``private_test`` and
a nested ``tree`` of ``{feature, threshold, left, right}`` / ``{value,
n_samples}`` nodes.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from typing import Sequence

import numpy as np

from evosample import __version__
from evosample.data import make_synthetic, write_csv
from evosample.errors import ConfigError, DataError, InvariantError
from evosample.experiment import (
    ExperimentSpec,
    dumps_report,
    load_config,
    run_benchmark,
    run_experiment,
    runs_csv,
    summary_csv,
    summary_table,
    write_report,
)
from evosample.schema import validate_report

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INVARIANT = 0, 1, 2, 3

logger = logging.getLogger("evosample")


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse would exit with 2
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_experiment_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="YAML/JSON file supplying any of these flags")
    p.add_argument("--data-path")
    p.add_argument("--target-column")
    p.add_argument("--mode", choices=["sub_sampling", "sub_spacing"])
    p.add_argument("--fitness", choices=["fempo", "fempt", "fegt"])
    p.add_argument("--test-fraction", type=float)
    p.add_argument("--runs", type=int)
    p.add_argument("--base-seed", type=int)
    p.add_argument("--output-path", help="report JSON path (default: stdout)")
    ga = p.add_argument_group("GA overrides")
    ga.add_argument("--population-size", type=int)
    ga.add_argument("--generations", type=int)
    ga.add_argument("--tournament-size", type=int)
    ga.add_argument("--crossover-rate", type=float)
    ga.add_argument("--mutation-rate", type=float)
    ga.add_argument("--global-holdout-fraction", type=float)
    ga.add_argument("--mutation-exclusive", action=argparse.BooleanOptionalAction, default=None)
    ga.add_argument("--ensemble-size", type=int)
    ga.add_argument("--bag-fraction", type=float)
    ga.add_argument("--feature-fraction", type=float)
    ga.add_argument("--private-test-fraction", type=float)
    ga.add_argument("--mutation-intensity", type=float)
    ga.add_argument("--floor-rows", type=int)
    ga.add_argument("--floor-features", type=int)
    ga.add_argument("--members-per-mutation", type=int)
    ga.add_argument("--max-depth", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="evosample", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run one experiment")
    _add_experiment_flags(run)
    run.add_argument("--runs-csv", help="also write per-run outcomes as CSV")
    run.add_argument("--dump-individuals", metavar="DIR",
                     help="write FI and HOF of every run as JSON into DIR")
    run.add_argument("--jobs", type=int, default=1, help="parallel runs (processes)")
    run.add_argument("--progress", action="store_true",
                     help="print gen=<g> best=<f> mean=<f> lines on stderr")

    bench = sub.add_parser("bench", help="run a benchmark grid")
    bench.add_argument("grid", help="grid file (YAML/JSON)")
    bench.add_argument("--output-dir", help="directory for per-cell reports and summaries")
    bench.add_argument("--jobs", type=int, default=1)

    synth = sub.add_parser("synth", help="write a synthetic CSV")
    synth.add_argument("--n-rows", type=int, default=200)
    synth.add_argument("--n-cols", type=int, default=4)
    synth.add_argument("--noise", type=float, default=0.1)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--output", required=True)

    sub.add_parser("selftest", help="run the invariant suite")
    return parser


def spec_from_args(args: argparse.Namespace) -> ExperimentSpec:
    raw = load_config(args.config) if args.config else {}
    raw = {k.replace("-", "_"): v for k, v in raw.items()}
    skip = {"config", "command", "verbose", "runs_csv", "dump_individuals", "jobs", "progress"}
    for key, value in vars(args).items():
        if key not in skip and value is not None:
            raw[key] = value
    return ExperimentSpec.from_mapping(raw)


def cmd_run(args: argparse.Namespace) -> int:
    spec = spec_from_args(args)
    report = run_experiment(spec, jobs=args.jobs, dump_dir=args.dump_individuals,
                            progress=args.progress)
    try:
        validate_report(report)
    except Exception as exc:
        raise InvariantError(f"report failed schema validation: {exc}") from exc
    if spec.output_path:
        write_report(report, spec.output_path)
    else:
        sys.stdout.write(dumps_report(report))
    if args.runs_csv:
        with open(args.runs_csv, "w") as fh:
            fh.write(runs_csv(report))
    agg = report["aggregate"]
    if agg:
        print(
            f"hof_mean={agg['hof_mean']:.4g} fi_mean={agg['fi_mean']:.4g} "
            f"win={agg['win_percent']:.0f}% p={agg['p_value']:.3g}",
            file=sys.stderr,
        )
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    grid = load_config(args.grid)
    base_dir = os.path.dirname(os.path.abspath(args.grid))
    results = run_benchmark(grid, output_dir=args.output_dir, base_dir=base_dir, jobs=args.jobs)
    table = summary_table(results)
    sys.stdout.write(table)
    if args.output_dir:
        os.makedirs(args.output_dir, exist_ok=True)
        with open(os.path.join(args.output_dir, "summary.txt"), "w") as fh:
            fh.write(table)
        with open(os.path.join(args.output_dir, "summary.csv"), "w") as fh:
            fh.write(summary_csv(results))
    failed = [r for r in results if r.error]
    for r in failed:
        print(f"cell {r.dataset}/{r.mode.value}/{r.fitness.value} failed: {r.error}",
              file=sys.stderr)
    return EXIT_DATA if failed and len(failed) == len(results) else EXIT_OK


def cmd_synth(args: argparse.Namespace) -> int:
    ds = make_synthetic(args.n_rows, args.n_cols, args.noise, np.random.default_rng(args.seed))
    write_csv(ds, args.output)
    return EXIT_OK


def cmd_selftest(args: argparse.Namespace) -> int:
    from evosample import selftest

    ok = True
    for name, check in selftest.CHECKS.items():
        result = check()
        print(result.line(), flush=True)
        ok &= result.passed
    return EXIT_OK if ok else EXIT_INVARIANT


COMMANDS = {"run": cmd_run, "bench": cmd_bench, "synth": cmd_synth, "selftest": cmd_selftest}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except InvariantError as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    raise SystemExit(main())
