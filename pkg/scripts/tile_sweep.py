"""Cycle counts over square layer sizes and tile sizes.

Writes the speedup report CSV and prints the T=8 / T=32 cycle ratio plus
cycles per multiply-accumulate for each size at the largest tile.

    python3 scripts/tile_sweep.py --sizes 64,128,256 --tiles 8,16,32 --out sweep.csv
"""

import argparse
import csv
import io

from dlau.io import RunConfig
from dlau.runs import sweep_report


def ints(text):
    return [int(p) for p in text.split(",")]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=ints, default=[64, 128, 256])
    ap.add_argument("--tiles", type=ints, default=[8, 16, 32])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--dma-bw", type=float, default=32.0)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out")
    args = ap.parse_args()

    base = RunConfig(ni=args.sizes[0], no=args.sizes[0], seed=args.seed,
                     dma_words_per_cycle=args.dma_bw)
    text = sweep_report(base, args.sizes, args.tiles, jobs=args.jobs)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)

    rows = list(csv.DictReader(io.StringIO(text)))
    cycles = {(int(r["Ni"]), int(r["tile_size"])): int(r["total_cycles"]) for r in rows}
    lo, hi = min(args.tiles), max(args.tiles)
    print(f"{'size':>6} {'T':>4} {'cycles':>8} {'cyc/MAC':>9}")
    for r in rows:
        print(f"{r['Ni']:>6} {r['tile_size']:>4} {r['total_cycles']:>8} {float(r['cycles_per_mac']):>9.4f}")
    for n in args.sizes:
        print(f"{n}x{n}: T={lo} / T={hi} cycle ratio {cycles[n, lo] / cycles[n, hi]:.3f}")


if __name__ == "__main__":
    main()
