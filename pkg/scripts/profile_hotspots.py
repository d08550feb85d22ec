"""Share of arithmetic spent in matrix products per workload and batch size.

    python3 scripts/profile_hotspots.py --layers 784,512,256 --batches 1,8,32
"""

import argparse

from dlau.nn_core import NetworkSpec, profile_ops


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--layers", default="784,512,256")
    ap.add_argument("--batches", default="1,8,32")
    args = ap.parse_args()

    spec = NetworkSpec(tuple(int(p) for p in args.layers.split(",")))
    print(f"layers {spec.layer_sizes}")
    print(f"{'workload':<12} {'batch':>5} {'mm':>8} {'act':>8} {'vector':>8}")
    for workload in ("feedforward", "rbm", "bp"):
        for batch in (int(b) for b in args.batches.split(",")):
            s = profile_ops(workload, spec, batch=batch).shares
            print(f"{workload:<12} {batch:>5} {s['mm']:>8.4f} {s['activation']:>8.4f} {s['vector']:>8.4f}")


if __name__ == "__main__":
    main()
