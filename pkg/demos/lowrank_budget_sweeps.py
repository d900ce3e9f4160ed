"""Error floors of the low-rank scheme under its three budgets.

The global error of the low-rank midpoint scheme decomposes into four
contributions,

    error <= c1 tau^2 + c2 delta + c3 eps1 + c4 eps2,

with delta the trace-norm defect of the starting factor, eps1 the column
compression budget and eps2 the exponential-action budget.

Refining tau with delta or eps1 held dominant drives the error onto a
plateau proportional to that budget: this script sweeps both on the
4-site chain of 4-level systems (m = 256) and prints the levels; expect
consecutive decades of the swept parameter to move its plateau by about
a decade.

The action budget behaves differently: the certified exponential action
stops at the first Taylor term count whose remainder bound clears the
budget, so between term-count transitions the realized error falls far
below it and the error curves collapse instead of flattening.  The
budget's real contribution is the peak excess over a tight-budget
baseline at matched step sizes, and that peak scales linearly in eps2.

The full-size run takes a few minutes; pass a smaller dimension (for
example --d 3 --sites 2) for a quick look.
"""

import argparse

from lindexp import (ExperimentSpec, LremConfig, ReferenceCache, ising_chain,
                     run_lowrank_sweep)


def base_spec(model, grid):
    return ExperimentSpec(model=model, scheme="lrem-forward", grid=grid,
                          config=LremConfig(1e-10, 1e-10), delta=1e-10,
                          horizon=1.0)


def sweep(model, vary, values, grid, cache):
    # plateau targets sit decades above 1e-9, so the cheaper reference
    # certification rung is plenty
    report = run_lowrank_sweep(base_spec(model, grid), vary, values,
                               cache=cache, gap_tol=1e-9)
    for value, family, level, flat in zip(report.values, report.reports,
                                          report.plateau_levels,
                                          report.plateaued):
        tag = "plateau" if flat else "still falling"
        print(f"  {vary} = {value:8.1e}   level {level:10.3e}   ({tag})")
        for row in family.rows:
            print(f"    tau {row.tau:8.5f}   error {row.error_trace:.3e}")
    return report


def action_budget_study(model, grid, cache):
    values = (1e-1, 1e-2, 1e-3)
    report = run_lowrank_sweep(base_spec(model, grid), "eps2",
                               values + (1e-10,), cache=cache, gap_tol=1e-9)
    baseline = report.reports[-1].errors
    print("  excess over the eps2 = 1e-10 baseline at matched tau:")
    for value, family in zip(values, report.reports):
        excess = family.errors - baseline
        cells = "   ".join(f"{e:+.2e}" for e in excess)
        print(f"  eps2 = {value:8.1e}   {cells}   peak {excess.max():.3e}")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--d", type=int, default=4)
    ap.add_argument("--sites", type=int, default=4)
    ap.add_argument("--cache", help="reference cache directory")
    args = ap.parse_args()

    model = ising_chain(args.d, args.sites)
    cache = ReferenceCache(root=args.cache) if args.cache else None

    # starting-factor budget: flat tolerances, each delta refined until
    # the tau^2 term drops below its level
    print("\nsweep over delta")
    sweep(model, "delta", (1e-3,), (10, 40, 160, 320), cache)
    sweep(model, "delta", (1e-5,), (10, 160, 640, 1280), cache)

    # compression budget: per-step scaled tolerance (eps1 = tau * value)
    # puts the floor near 3.6 * value, reached on the short grid
    print("\nsweep over eps1")
    sweep(model, "eps1", (1e-2, 1e-3, 1e-4), (10, 20, 40, 80, 160), cache)

    # exponential-action budget: realized action error sits well below
    # the budget, so the curves collapse; report the peak contribution
    print("\nsweep over eps2")
    action_budget_study(model, (10, 20, 40, 80, 160), cache)


if __name__ == "__main__":
    main()
