"""Closed-form cycle and resource estimates, and the speedup report."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction

from .sim import STATS_COLUMNS, SimConfig, SimStats, fmt_float, stats_row


@dataclass(frozen=True)
class CycleEstimate:
    tmmu_busy: int
    preload: int
    drain: int
    total: int
    assumptions: str


def _ceil_div(words: int, rate: Fraction) -> int:
    return math.ceil(Fraction(words) / rate)


def _block_starts(n_inputs: int, n_outputs: int, batch: int, cfg: SimConfig) -> list[int]:
    """Cycle at which each block's first part sum issues, FIFOs assumed never full.

    A block starts once the previous block has issued all its columns, its
    nodes sit in Reg_b and its weights are resident. Reg_b refills only after
    the previous block moved into Reg_a, and a re-streamed weight load waits
    for a free ping-pong slot.
    """
    T, No = cfg.tile_size, n_outputs
    rate = Fraction(cfg.dma_words_per_cycle)
    nb = -(-n_inputs // T)
    rows = [min(T, n_inputs - b * T) for b in range(nb)]
    n_loads = nb if cfg.cache_weights else batch * nb
    capacity = nb if cfg.cache_weights else 2

    w_ready: list[int] = []
    starts: list[int] = []
    w_free = Fraction(0)  # back-to-back loads share the channel's fractional credit
    for m in range(batch * nb):
        # weight loads are issued in order as soon as a slot frees up
        while len(w_ready) < min(n_loads, m + capacity):
            L = len(w_ready)
            begin = w_free if L < capacity else max(w_free, starts[L - capacity] + No - 1)
            w_free = begin + Fraction(rows[L % nb] * No) / rate
            w_ready.append(math.ceil(w_free))
        node_begin = 0 if m == 0 else starts[m - 1]
        node_ready = node_begin + _ceil_div(rows[m % nb], rate)
        load = m % nb if cfg.cache_weights else m
        prev_done = 0 if m == 0 else starts[m - 1] + No
        starts.append(max(prev_done, node_ready, w_ready[load]))
    return starts


def estimate_cycles(n_inputs: int, n_outputs: int, batch: int, cfg: SimConfig) -> CycleEstimate:
    """Cycle count predicted for one simulated layer.

    Compute-bound runs take preload + busy + drain: the first block's weights
    must be resident before the first part sum, the TMMU then issues one part
    sum per cycle, and the last one still crosses the adder tree, both FIFO
    hops and the activation pipeline. When DMA cannot keep up, the start of
    every block is pushed back to when its nodes and weights land.
    """
    for name, v in (("n_inputs", n_inputs), ("n_outputs", n_outputs), ("batch", batch)):
        if v < 1:
            raise ValueError(f"{name} must be >= 1, got {v}")
    T = cfg.tile_size
    rate = Fraction(cfg.dma_words_per_cycle)
    n_blocks = -(-n_inputs // T)
    busy = batch * n_blocks * n_outputs
    preload = _ceil_div(min(T, n_inputs) * n_outputs, rate)
    drain = cfg.adder_tree_latency + cfg.afau_latency + 2
    starts = _block_starts(n_inputs, n_outputs, batch, cfg)
    issued = starts[-1] + n_outputs
    total = issued + drain
    bound = "compute" if issued == preload + busy else "dma"
    assumptions = (
        f"one part sum per cycle; weights {'cached' if cfg.cache_weights else 're-streamed per batch row'}; "
        f"dma {fmt_float(cfg.dma_words_per_cycle)} words/cycle per channel; "
        f"FIFOs never full; {bound}-bound"
    )
    return CycleEstimate(busy, preload, drain, total, assumptions)


# ---------------------------------------------------------------------------
# resources
# ---------------------------------------------------------------------------

DSP_PER_FMUL = 3
DSP_PER_FADD = 2
PSAU_BRAMS, PSAU_DSPS = 1, 2
AFAU_BRAMS, AFAU_DSPS = 2, 7


@dataclass(frozen=True)
class UnitResources:
    brams: int
    dsps: int
    # no credible scaling law from a single calibration point
    ffs: int | None = None
    luts: int | None = None


@dataclass(frozen=True)
class ResourceEstimate:
    tile_size: int
    units: dict

    @property
    def total(self) -> UnitResources:
        return UnitResources(
            sum(u.brams for u in self.units.values()),
            sum(u.dsps for u in self.units.values()),
        )

    formulas = (
        "TMMU BRAMs = T (one weight bank per lane)",
        "TMMU DSPs = 3*T + 2*(T-1) (T float multipliers, T-1 tree adders)",
        "PSAU = 1 BRAM, 2 DSPs (one float adder)",
        "AFAU = 2 BRAMs (a and b tables), 7 DSPs (calibration constant)",
    )

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["unit", "brams", "dsps", "ffs", "luts"])
        rows = list(self.units.items()) + [("Total", self.total)]
        for name, u in rows:
            w.writerow([name, u.brams, u.dsps, "n/a", "n/a"])
        return buf.getvalue()


def estimate_resources(tile_size: int) -> ResourceEstimate:
    if tile_size < 1:
        raise ValueError(f"tile_size must be >= 1, got {tile_size}")
    T = tile_size
    tmmu = UnitResources(T, DSP_PER_FMUL * T + DSP_PER_FADD * (T - 1))
    return ResourceEstimate(T, {
        "TMMU": tmmu,
        "PSAU": UnitResources(PSAU_BRAMS, PSAU_DSPS),
        "AFAU": UnitResources(AFAU_BRAMS, AFAU_DSPS),
    })


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------

REPORT_COLUMNS = ("label",) + STATS_COLUMNS + (
    "cycles_per_output", "cycles_per_mac", "cycle_ratio", "speedup",
)


def cycles_per_output(s: SimStats) -> float:
    return s.total_cycles / (s.batch * s.n_outputs)


def cycles_per_mac(s: SimStats) -> float:
    return s.total_cycles / (s.batch * s.n_inputs * s.n_outputs)


def speedup_report(runs, baseline: str | None = None) -> str:
    """CSV with one row per (label, SimStats) run.

    Rows are sorted by (Ni, No, tile_size, label). ``cycle_ratio`` is
    run cycles / baseline cycles and ``speedup`` its inverse; the baseline
    defaults to the first sorted row.
    """
    runs = list(runs)
    if not runs:
        raise ValueError("speedup_report needs at least one run")
    labels = [label for label, _ in runs]
    dupes = sorted({l for l in labels if labels.count(l) > 1})
    if dupes:
        raise ValueError(f"duplicate run labels: {dupes}")
    runs.sort(key=lambda r: (r[1].n_inputs, r[1].n_outputs, r[1].tile_size, r[0]))
    by_label = dict(runs)
    if baseline is None:
        baseline = runs[0][0]
    if baseline not in by_label:
        raise ValueError(f"baseline {baseline!r} is not one of the run labels")
    base = by_label[baseline].total_cycles

    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=REPORT_COLUMNS, lineterminator="\n")
    w.writeheader()
    for label, s in runs:
        row = {"label": label, **stats_row(s)}
        row["cycles_per_output"] = fmt_float(cycles_per_output(s))
        row["cycles_per_mac"] = fmt_float(cycles_per_mac(s))
        row["cycle_ratio"] = fmt_float(s.total_cycles / base)
        row["speedup"] = fmt_float(base / s.total_cycles)
        w.writerow(row)
    return buf.getvalue()
