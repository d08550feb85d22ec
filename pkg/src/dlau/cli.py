"""Command-line interface.

Exit codes: 0 success, 2 usage/config error, 3 input-file error,
4 simulation error (deadlock).
"""

from __future__ import annotations

import argparse
import csv
import io
import sys

import numpy as np

from . import runs
from .io import ConfigError, TensorFileError, gen_synthetic, load_run_config, read_tensor, write_tensor
from .nn_core import NetworkSpec, ShapeError, matvec_naive, profile_ops
from .perf import estimate_resources
from .pwl import DEFAULT_K, build_pwl_table
from .sim import SimulationDeadlock, stats_csv
from .tensor import Tensor2D
from .tiled import TileConfig, resolve_activation, tiled_forward

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_SIM = 0, 2, 3, 4


class UsageError(Exception):
    pass


class InputError(Exception):
    pass


def _int_list(text: str) -> list[int]:
    try:
        vals = [int(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not vals or any(v < 1 for v in vals):
        raise argparse.ArgumentTypeError(f"expected positive integers, got {text!r}")
    return vals


def _emit(text: str, path) -> None:
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _read_input(path) -> Tensor2D:
    try:
        return read_tensor(path)
    except (OSError, TensorFileError) as exc:
        raise InputError(f"{path}: {exc}") from exc


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_gen(args) -> int:
    if args.fill == "uniform":
        t = gen_synthetic(args.rows, args.cols, args.seed)
    elif args.fill == "zeros":
        t = Tensor2D(np.zeros((args.rows, args.cols)))
    else:
        t = Tensor2D(np.eye(args.rows, args.cols))
    write_tensor(args.out, t)
    return EXIT_OK


def cmd_run(args) -> int:
    W = _read_input(args.weights)
    X = _read_input(args.input)
    if W.rows != X.cols:
        raise InputError(f"input has {X.cols} columns but weights have {W.rows} rows")
    activation = "exact" if args.exact_sigmoid else build_pwl_table(args.pwl_k)
    Y = tiled_forward(W, X, TileConfig(args.tile_size, X.rows), activation)
    write_tensor(args.out, Y)
    if args.check:
        f = resolve_activation(activation)
        ref = np.stack([f(matvec_naive(W, X[n])) for n in range(X.rows)])
        print(f"max_abs_diff={float(np.max(np.abs(Y - ref))):.3e}")
    return EXIT_OK


_SIM_FLAGS = {
    "ni": "ni", "no": "no", "batch": "batch", "tile_size": "tile_size",
    "fifo_depth": "fifo_depth", "dma_bw": "dma_words_per_cycle", "pwl_k": "pwl_k",
    "seed": "seed", "clock_mhz": "clock_mhz", "adder_tree_latency": "adder_tree_latency",
    "afau_latency": "afau_latency",
}


def _run_config(args, **extra):
    overrides = {key: getattr(args, flag) for flag, key in _SIM_FLAGS.items() if hasattr(args, flag)}
    if getattr(args, "cache_weights", False):
        overrides["cache_weights"] = True
    overrides.update(extra)
    try:
        return load_run_config(args.config, overrides)
    except OSError as exc:
        raise InputError(f"{args.config}: {exc}") from exc


def cmd_sim(args) -> int:
    W = _read_input(args.weights) if args.weights else None
    X = _read_input(args.input) if args.input else None
    extra = {}
    if W is not None:
        extra.update(ni=W.rows, no=W.cols)
    if X is not None:
        extra.update(ni=X.cols, batch=X.rows)
    if W is not None and X is not None and W.rows != X.cols:
        raise InputError(f"input has {X.cols} columns but weights have {W.rows} rows")
    cfg = _run_config(args, **extra)
    Y, stats = runs.simulate(cfg, W, X)
    if args.out:
        write_tensor(args.out, Y)
    _emit(stats_csv([stats]), args.stats_out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    base = _run_config(args, ni=args.sizes[0], no=args.sizes[0])
    text = runs.sweep_report(base, args.sizes, args.tiles, jobs=args.jobs, baseline=args.baseline)
    _emit(text, args.out)
    return EXIT_OK


def cmd_profile(args) -> int:
    spec = NetworkSpec(tuple(args.layers))
    rep = profile_ops(args.workload, spec, batch=args.batch, seed=args.seed)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["workload", "category", "ops", "share"])
    counts = {"mm": rep.mm_ops, "activation": rep.activation_ops, "vector": rep.vector_ops}
    for cat, share in rep.shares.items():
        w.writerow([args.workload, cat, counts[cat], f"{share:.6f}"])
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def cmd_resources(args) -> int:
    _emit(estimate_resources(args.tile_size).to_csv(), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_sim_flags(p, network=True):
    p.add_argument("--config", help="key = value run configuration file")
    if network:
        p.add_argument("--ni", type=int)
        p.add_argument("--no", type=int)
    p.add_argument("--batch", type=int)
    p.add_argument("--tile-size", dest="tile_size", type=int)
    p.add_argument("--fifo-depth", dest="fifo_depth", type=int)
    p.add_argument("--dma-bw", dest="dma_bw", type=float, help="DMA words per cycle per channel")
    p.add_argument("--pwl-k", dest="pwl_k", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--clock-mhz", dest="clock_mhz", type=float)
    p.add_argument("--adder-tree-latency", dest="adder_tree_latency", type=int)
    p.add_argument("--afau-latency", dest="afau_latency", type=int)
    p.add_argument("--cache-weights", dest="cache_weights", action="store_true",
                   help="keep all weight blocks resident across batch rows")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dlau", description="DLAU accelerator model")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write a synthetic DLT1 tensor")
    p.add_argument("--rows", type=int, required=True)
    p.add_argument("--cols", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fill", choices=("uniform", "zeros", "identity"), default="uniform")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("run", help="functional tiled forward pass")
    p.add_argument("--weights", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--tile-size", dest="tile_size", type=int, default=32)
    p.add_argument("--exact-sigmoid", action="store_true")
    p.add_argument("--pwl-k", dest="pwl_k", type=float, default=DEFAULT_K)
    p.add_argument("--out", required=True)
    p.add_argument("--check", action="store_true", help="print max |diff| against the untiled oracle")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sim", help="cycle-level simulation of one layer")
    _add_sim_flags(p)
    p.add_argument("--weights")
    p.add_argument("--input")
    p.add_argument("--out", help="output tensor path")
    p.add_argument("--stats-out", dest="stats_out", help="stats CSV path (default stdout)")
    p.set_defaults(func=cmd_sim)

    p = sub.add_parser("sweep", help="simulate sizes x tile sizes")
    _add_sim_flags(p, network=False)
    p.add_argument("--sizes", type=_int_list, default=[64, 128, 256])
    p.add_argument("--tiles", type=_int_list, default=[8, 16, 32])
    p.add_argument("--baseline", help="label of the ratio baseline run")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("profile", help="operation-count hot-spot profile")
    p.add_argument("--workload", choices=("feedforward", "rbm", "bp"), required=True)
    p.add_argument("--layers", type=_int_list, default=[784, 256, 256, 10])
    p.add_argument("--batch", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("resources", help="BRAM/DSP estimate")
    p.add_argument("--tile-size", dest="tile_size", type=int, default=32)
    p.add_argument("--out")
    p.set_defaults(func=cmd_resources)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        return args.func(args)
    except SimulationDeadlock as exc:
        print(f"dlau: simulation error: {exc}", file=sys.stderr)
        return EXIT_SIM
    except (InputError, ShapeError) as exc:
        print(f"dlau: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ConfigError, UsageError, ValueError) as exc:
        print(f"dlau: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
