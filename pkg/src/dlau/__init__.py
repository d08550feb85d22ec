"""Cycle-level model of the DLAU tiled deep-learning accelerator."""

from .io import RunConfig, gen_synthetic, load_run_config, read_tensor, write_tensor
from .nn_core import (
    NetworkSpec,
    OpCountReport,
    backprop_ref,
    feedforward_ref,
    matvec_naive,
    profile_ops,
    rbm_cd1_ref,
    sigmoid_exact,
)
from .perf import estimate_cycles, estimate_resources, speedup_report
from .prng import SplitMix64
from .pwl import PwlTable, build_pwl_table, pwl_max_error, pwl_sigmoid
from .sim import SimConfig, SimStats, load_weights_banked, sim_run
from .tensor import Tensor2D
from .tiled import TileConfig, tile_partition, tiled_forward

__version__ = "0.1.0"
