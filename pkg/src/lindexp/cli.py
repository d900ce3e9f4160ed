"""Command-line front end for the propagation experiments.

Subcommands mirror the harness: `converge` fits the order of a scheme
against a certified reference, `series` records per-step structure
diagnostics, `sweep` varies one low-rank driver, `timing` races the
schemes at matched accuracy, and `check` runs the seeded invariant
battery.  Exit codes: 0 success, 1 validation problem, 2 reference
certification failure.
"""
import argparse
import json
import os
import sys

from .lrem import LremConfig
from .model import load_model
from .oracle import OracleFailure, ReferenceCache
from . import harness

DEFAULT_GRID = "10,20,40,80,160"


def _int_list(text):
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected comma-separated integers, got {text!r}")


def _float_list(text):
    try:
        return tuple(float(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected comma-separated numbers, got {text!r}")


def _add_run_flags(parser, scheme=True):
    parser.add_argument("--model", required=True,
                        help="JSON model description")
    if scheme:
        parser.add_argument("--scheme", choices=harness.SCHEMES,
                            default="frem-forward")
    parser.add_argument("--eps1", type=float, default=1e-10,
                        help="rank compression tolerance")
    parser.add_argument("--eps2", type=float, default=1e-10,
                        help="exponential action tolerance")
    parser.add_argument("--scale-eps", action="store_true",
                        help="use per-step tolerances tau * eps")
    parser.add_argument("--delta", type=float, default=0.0,
                        help="starting-factor trace-norm budget")
    parser.add_argument("--normalized",
                        action=argparse.BooleanOptionalAction,
                        default=True,
                        help="renormalize the full-rank scheme per step")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--horizon", type=float, default=1.0)
    parser.add_argument("--out", default=".", help="report directory")
    parser.add_argument("--format", choices=("csv", "json"), default="csv")


def _spec_from(args, grid):
    model = load_model(args.model)
    config = LremConfig(epsilon1=args.eps1, epsilon2=args.eps2,
                        tolerance_scaling=args.scale_eps)
    return harness.ExperimentSpec(
        model=model, scheme=args.scheme, grid=grid, config=config,
        normalized=args.normalized, delta=args.delta,
        horizon=args.horizon, seed=args.seed)


def _prepare_out(args):
    os.makedirs(args.out, exist_ok=True)
    return args.out


def _emit(report, args, stem):
    out = _prepare_out(args)
    for path in harness.write_report(report, os.path.join(out, stem),
                                     args.format):
        print(f"wrote {path}")


def cmd_converge(args):
    spec = _spec_from(args, args.steps)
    report = harness.run_convergence(spec, cache=ReferenceCache())
    _emit(report, args, f"converge_{args.scheme}")
    print(f"fitted order {report.fitted_order:.3f} "
          f"from {report.points_fit} points "
          f"(oracle accuracy {report.oracle_accuracy:.2e})")
    return 0


def cmd_series(args):
    if len(args.steps) != 1:
        raise ValueError("series takes a single step count")
    spec = _spec_from(args, args.steps)
    report = harness.run_structure_series(
        spec, population_index=args.population)
    _emit(report, args, f"series_{args.scheme}")
    drifts = [row[3] for row in report.rows]
    eigs = [row[4] for row in report.rows]
    print(f"max trace drift {max(drifts):.3e}, "
          f"min eigenvalue {min(eigs):.3e}")
    return 0


def cmd_sweep(args):
    spec = _spec_from(args, args.steps)
    sweep = harness.run_lowrank_sweep(spec, args.vary, args.values,
                                      cache=ReferenceCache())
    out = _prepare_out(args)
    for value, report in zip(sweep.values, sweep.reports):
        stem = os.path.join(out, f"sweep_{args.vary}_{value:g}")
        for path in harness.write_report(report, stem, args.format):
            print(f"wrote {path}")
    summary = os.path.join(out, f"sweep_{args.vary}.json")
    with open(summary, "w") as handle:
        json.dump(sweep.meta(), handle, indent=1, sort_keys=True)
        handle.write("\n")
    print(f"wrote {summary}")
    for value, level, flat in zip(sweep.values, sweep.plateau_levels,
                                  sweep.plateaued):
        state = "plateau" if flat else "still falling"
        print(f"{args.vary}={value:g}: level {level:.3e} ({state})")
    return 0


def cmd_timing(args):
    report = harness.run_timing(
        dims=args.dims, count=args.count, target=args.target,
        horizon=args.horizon, repeats=args.repeats,
        max_steps=args.max_steps, cache=ReferenceCache(),
        progress=lambda msg: print(msg, file=sys.stderr))
    out = _prepare_out(args)
    for path in harness.write_report(report,
                                     os.path.join(out, "timing"),
                                     args.format):
        print(f"wrote {path}")
    for row in report.rows:
        print(f"{row.method:10s} m={row.m:4d} steps={row.steps:5d} "
              f"error={row.error_trace:.2e} wall={row.wall_s:.4f}s "
              f"[{row.status}]")
    return 0


def cmd_check(args):
    ok, lines = harness.run_check(seed=args.seed, samples=args.samples)
    for line in lines:
        print(line)
    passed = sum(line.startswith("pass") for line in lines)
    print(f"{passed}/{len(lines)} checks passed")
    return 0 if ok else 1


def build_parser():
    parser = argparse.ArgumentParser(
        prog="lindexp",
        description="Positivity-preserving exponential integrators "
                    "for Lindblad dynamics")
    commands = parser.add_subparsers(dest="command", required=True)

    converge = commands.add_parser(
        "converge", help="errors vs step size with order fit")
    _add_run_flags(converge)
    converge.add_argument("--steps", type=_int_list, default=DEFAULT_GRID,
                          help="comma-separated step counts")
    converge.set_defaults(func=cmd_converge)

    series = commands.add_parser(
        "series", help="per-step structure diagnostics")
    _add_run_flags(series)
    series.add_argument("--steps", type=_int_list, default="200")
    series.add_argument("--population", type=int, default=None,
                        help="diagonal index to record")
    series.set_defaults(func=cmd_series)

    sweep = commands.add_parser(
        "sweep", help="error curves as one low-rank driver varies")
    _add_run_flags(sweep)
    sweep.add_argument("--steps", type=_int_list, default=DEFAULT_GRID)
    sweep.add_argument("--vary", choices=("delta", "eps1", "eps2"),
                       required=True)
    sweep.add_argument("--values", type=_float_list, required=True)
    sweep.set_defaults(func=cmd_sweep)

    timing = commands.add_parser(
        "timing", help="wall time per scheme at matched accuracy")
    timing.add_argument("--dims", type=_int_list, default="4,6,8,12",
                        help="qudit levels per site")
    timing.add_argument("--count", type=int, default=2,
                        help="number of sites")
    timing.add_argument("--target", type=float, default=1e-3)
    timing.add_argument("--repeats", type=int, default=5)
    timing.add_argument("--max-steps", type=int, default=4096)
    timing.add_argument("--horizon", type=float, default=1.0)
    timing.add_argument("--out", default=".")
    timing.add_argument("--format", choices=("csv", "json"),
                        default="csv")
    timing.set_defaults(func=cmd_timing)

    check = commands.add_parser(
        "check", help="seeded invariant battery")
    check.add_argument("--seed", type=int, default=0)
    check.add_argument("--samples", type=int, default=200)
    check.set_defaults(func=cmd_check)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage problems; fold into validation code
        return 0 if exc.code == 0 else 1
    if isinstance(getattr(args, "steps", None), str):
        args.steps = _int_list(args.steps)
    if isinstance(getattr(args, "dims", None), str):
        args.dims = _int_list(args.dims)
    try:
        return args.func(args)
    except OracleFailure as exc:
        print(f"reference certification failed: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
