"""Max error of the piecewise-linear sigmoid for every supported segment width.

Optionally exports the table for one width as CSV.

    python3 scripts/pwl_error.py --export 0.5 --out pwl_k0.5.csv
"""

import argparse

from dlau.pwl import VALID_K, build_pwl_table, export_table_csv, pwl_max_error


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=100_000)
    ap.add_argument("--export", type=float, help="segment width whose table to export")
    ap.add_argument("--out", default="pwl_table.csv")
    args = ap.parse_args()

    print(f"{'k':>6} {'segments':>8} {'max err':>10} {'at x':>8}")
    for k in sorted(VALID_K):
        table = build_pwl_table(k)
        err, where = pwl_max_error(table, samples=args.samples)
        print(f"{k:>6} {table.segments:>8} {err:>10.2e} {where:>8.3f}")
    if args.export is not None:
        export_table_csv(build_pwl_table(args.export), args.out)
        print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
