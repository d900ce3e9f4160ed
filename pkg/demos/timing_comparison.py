"""Wall-clock comparison at matched accuracy.

Races three ways of propagating the 2-site transverse-field chain to an
endpoint error of about 1e-3: the full-rank midpoint scheme, the
low-rank midpoint scheme (eps1 = tau^3, eps2 = 1e-6, exact rank-1
start), and classical RK4 on the vectorized density matrix through the
dense-assembled Liouvillian.  Step counts are calibrated per method by
doubling until the certified error target is met; walls are the median
of five single-threaded repeats.

The dense superoperator needs two m^2-by-m^2 complex matrices, which
exceeds the configured memory ceiling beyond m = 64; such cells are
reported as dnf-memory rather than raced.  Expect the low-rank column to
win at the larger sizes.
"""

import argparse

from lindexp import ReferenceCache, run_timing


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dims", default="4,6,8,12",
                    help="comma-separated d values, sites fixed at 2")
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--cache", help="reference cache directory")
    args = ap.parse_args()

    dims = tuple(int(v) for v in args.dims.split(","))
    cache = ReferenceCache(root=args.cache) if args.cache else None
    report = run_timing(dims=dims, repeats=args.repeats, cache=cache,
                        progress=print)

    print(f"\n{'m':>6} {'method':>10} {'steps':>7} {'error':>11} "
          f"{'wall [s]':>10} {'status':>12}")
    for row in report.rows:
        wall = f"{row.wall_s:10.3f}" if row.status == "ok" else " " * 10
        print(f"{row.m:6d} {row.method:>10} {row.steps:7d} "
              f"{row.error_trace:11.2e} {wall} {row.status:>12}")


if __name__ == "__main__":
    main()
