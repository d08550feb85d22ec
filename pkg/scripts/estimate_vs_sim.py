"""Relative gap between estimate_cycles and the simulator over random configs.

Reports the worst gap separately for stall-free and stalled runs.

    python3 scripts/estimate_vs_sim.py --runs 500
"""

import argparse

import numpy as np

from dlau.perf import estimate_cycles
from dlau.prng import SplitMix64
from dlau.pwl import build_pwl_table
from dlau.sim import SimConfig, sim_run


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--runs", type=int, default=500)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    rng = SplitMix64(args.seed)

    def pick(opts):
        return opts[int(rng.next_u64() % len(opts))]

    table = build_pwl_table(0.5)
    worst = {True: (0.0, None), False: (0.0, None)}
    for _ in range(args.runs):
        ni, no, batch = pick(range(1, 71)), pick(range(1, 21)), pick((1, 2, 3))
        cfg = SimConfig(
            tile_size=pick((1, 2, 3, 4, 8, 16, 32)),
            fifo_depth=pick((1, 2, 3, 4)),
            dma_words_per_cycle=pick((0.125, 0.25, 0.375, 0.5, 1.0, 2.5, 8.0, 32.0)),
            cache_weights=pick((False, True)),
        )
        # values do not affect timing
        _, s = sim_run(cfg, np.zeros((ni, no)), np.zeros((batch, ni)), table)
        est = estimate_cycles(ni, no, batch, cfg).total
        gap = abs(est - s.total_cycles) / s.total_cycles
        stall_free = s.tmmu_stall_cycles == 0
        if gap >= worst[stall_free][0]:
            worst[stall_free] = (gap, (ni, no, batch, cfg.tile_size, cfg.dma_words_per_cycle,
                                       cfg.cache_weights, est, s.total_cycles))
    for stall_free, label in ((True, "stall-free"), (False, "stalled")):
        gap, where = worst[stall_free]
        print(f"{label:>10}: worst gap {gap:.3%} at (Ni, No, batch, T, bw, cache, est, sim) = {where}")


if __name__ == "__main__":
    main()
