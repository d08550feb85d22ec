"""Library entry points behind the CLI's sim and sweep commands."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

from .io import RunConfig, gen_synthetic
from .perf import speedup_report
from .pwl import build_pwl_table
from .sim import sim_run


def synthetic_layer(cfg: RunConfig):
    """Weights from ``seed`` and inputs from ``seed + 1``."""
    W = gen_synthetic(cfg.ni, cfg.no, cfg.seed)
    X = gen_synthetic(cfg.batch, cfg.ni, cfg.seed + 1)
    return W, X


def simulate(cfg: RunConfig, W=None, X=None):
    if W is None or X is None:
        gw, gx = synthetic_layer(cfg)
        W = gw if W is None else W
        X = gx if X is None else X
    return sim_run(cfg.sim_config(), W, X, build_pwl_table(cfg.pwl_k))


def sweep_label(cfg: RunConfig) -> str:
    return f"{cfg.ni}x{cfg.no}_t{cfg.tile_size}"


def _sweep_point(cfg: RunConfig):
    _, stats = simulate(cfg)
    return sweep_label(cfg), stats


def sweep(base: RunConfig, sizes, tiles, jobs: int = 1):
    """Simulate every (square size, tile size) pair; returns [(label, SimStats)]."""
    points = [replace(base, ni=n, no=n, tile_size=t) for n in sizes for t in tiles]
    # validates each point before any work is started
    for p in points:
        p.sim_config()
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_point, points))
    else:
        results = [_sweep_point(p) for p in points]
    return results


def sweep_report(base: RunConfig, sizes, tiles, jobs: int = 1, baseline: str | None = None) -> str:
    return speedup_report(sweep(base, sizes, tiles, jobs), baseline)
