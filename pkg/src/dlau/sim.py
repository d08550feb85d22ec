"""Cycle-level model of the DMA -> TMMU -> PSAU -> AFAU pipeline.

Timing model
------------
One global loop advances the units once per cycle, downstream first
(AFAU, PSAU, TMMU, DMA), so a value produced in cycle ``c`` is consumed at
the earliest in cycle ``c + 1``.

* DMA has two read channels, one filling weight blocks and one filling the
  standby node register (Reg_b). Each channel moves ``dma_words_per_cycle``
  words per cycle; fractional rates carry credit between cycles.
* Weights live in T banks (row i in bank i mod T). Without weight caching the
  banks hold two tile blocks (the active one plus the one being prefetched)
  and every batch row re-streams its blocks. With caching all blocks of W
  stay resident after the first batch row.
* TMMU starts a block once its weights are resident and Reg_b holds its node
  values (Reg_b then becomes Reg_a). It issues one output column per cycle
  into an ``adder_tree_latency``-deep pipeline whose tail pushes a part sum
  into the TMMU->PSAU FIFO. If that FIFO is full the whole tree freezes.
* PSAU pops one part sum per cycle into one of No accumulators and pushes
  completed sums into the PSAU->AFAU FIFO.
* AFAU pops one value per cycle and writes the activated result to the
  output buffer ``afau_latency`` cycles later.

Datapath arithmetic is float32: products and the pairwise adder tree, PSAU
accumulation, and the stored activation.
"""

from __future__ import annotations

import csv
import io
import math
from collections import deque
from dataclasses import dataclass, field, fields
from fractions import Fraction

import numpy as np

from .nn_core import ShapeError
from .pwl import PwlTable, pwl_sigmoid
from .tensor import as_matrix


class SimulationDeadlock(RuntimeError):
    """No unit made progress for longer than the run could need."""


def min_tree_latency(tile_size: int) -> int:
    return math.ceil(math.log2(max(tile_size, 2)))


@dataclass(frozen=True)
class SimConfig:
    tile_size: int = 32
    fifo_depth: int = 64
    dma_words_per_cycle: float = 32.0
    adder_tree_latency: int | None = None
    afau_latency: int = 3
    clock_mhz: float = 200.0
    cache_weights: bool = False

    def __post_init__(self):
        if self.tile_size < 1:
            raise ValueError(f"tile_size must be >= 1, got {self.tile_size}")
        if self.fifo_depth < 1:
            raise ValueError(f"fifo_depth must be >= 1, got {self.fifo_depth}")
        if self.dma_words_per_cycle < 0.125:
            raise ValueError(f"dma_words_per_cycle must be >= 0.125, got {self.dma_words_per_cycle}")
        if self.adder_tree_latency is None:
            # one multiplier stage in front of the tree
            object.__setattr__(self, "adder_tree_latency", min_tree_latency(self.tile_size) + 1)
        if self.adder_tree_latency < min_tree_latency(self.tile_size):
            raise ValueError(
                f"adder_tree_latency={self.adder_tree_latency} is below "
                f"ceil(log2 T)={min_tree_latency(self.tile_size)}"
            )
        if self.afau_latency < 1:
            raise ValueError(f"afau_latency must be >= 1, got {self.afau_latency}")
        if self.clock_mhz <= 0:
            raise ValueError(f"clock_mhz must be positive, got {self.clock_mhz}")


# ---------------------------------------------------------------------------
# storage and queues
# ---------------------------------------------------------------------------

@dataclass
class WeightBanks:
    """W split across ``tile_size`` banks; bank n holds rows i with i % T == n.

    Rows past the end of W (the short edge tile) are zero-padded so every
    bank holds the same number of rows.
    """

    tile_size: int
    n_rows: int
    banks: list[np.ndarray]

    @property
    def n_blocks(self) -> int:
        return self.banks[0].shape[0]

    def bank_of(self, row: int) -> int:
        return row % self.tile_size

    def block(self, b: int) -> np.ndarray:
        """T x No weights of tile block ``b`` (bank n supplies row b*T + n)."""
        return np.stack([bank[b] for bank in self.banks])

    def block_rows(self, b: int) -> int:
        """Number of real (unpadded) rows in block ``b``."""
        return min(self.tile_size, self.n_rows - b * self.tile_size)

    def reconstruct(self) -> np.ndarray:
        rows = [self.banks[i % self.tile_size][i // self.tile_size] for i in range(self.n_rows)]
        return np.stack(rows)


def load_weights_banked(W, tile_size: int) -> WeightBanks:
    w = np.asarray(W, dtype=np.float32)
    if w.ndim != 2 or w.size == 0:
        raise ValueError(f"weights must be a non-empty 2-D matrix, got shape {w.shape}")
    if tile_size < 1:
        raise ValueError(f"tile_size must be >= 1, got {tile_size}")
    n_rows, n_cols = w.shape
    n_blocks = -(-n_rows // tile_size)
    padded = np.zeros((n_blocks * tile_size, n_cols), dtype=np.float32)
    padded[:n_rows] = w
    banks = [padded[n::tile_size].copy() for n in range(tile_size)]
    return WeightBanks(tile_size, n_rows, banks)


class FifoModel:
    """Bounded FIFO with push/pop/stall counters."""

    def __init__(self, depth: int, name: str = "fifo"):
        if depth < 1:
            raise ValueError(f"FIFO depth must be >= 1, got {depth}")
        self.depth = depth
        self.name = name
        self.queue: deque = deque()
        self.push_count = 0
        self.pop_count = 0
        self.stall_count = 0
        self.max_occupancy = 0

    def __len__(self):
        return len(self.queue)

    @property
    def full(self) -> bool:
        return len(self.queue) >= self.depth

    def push(self, item) -> None:
        if self.full:
            raise OverflowError(f"{self.name}: push into full FIFO (depth {self.depth})")
        self.queue.append(item)
        self.push_count += 1
        self.max_occupancy = max(self.max_occupancy, len(self.queue))

    def pop(self):
        self.pop_count += 1
        return self.queue.popleft()

    def peek(self):
        return self.queue[0]

    def stall(self) -> None:
        self.stall_count += 1


def pairwise_sum(products: np.ndarray) -> np.ndarray:
    """Binary adder tree reduction along axis 0, in float32."""
    level = np.asarray(products, dtype=np.float32)
    while level.shape[0] > 1:
        if level.shape[0] % 2:
            level = np.concatenate([level, np.zeros((1,) + level.shape[1:], dtype=np.float32)])
        level = level[0::2] + level[1::2]
    return level[0]


# ---------------------------------------------------------------------------
# statistics
# ---------------------------------------------------------------------------

@dataclass
class SimStats:
    n_inputs: int
    n_outputs: int
    batch: int
    tile_size: int
    fifo_depth: int
    dma_words_per_cycle: float
    clock_mhz: float
    total_cycles: int = 0
    tmmu_busy_cycles: int = 0
    tmmu_stall_cycles: int = 0
    psau_busy_cycles: int = 0
    afau_busy_cycles: int = 0
    dma_cycles: int = 0
    part_sums_emitted: int = 0
    first_issue_cycle: int = -1
    fifo_max_occupancy: dict = field(default_factory=dict)

    @property
    def max_fifo_occupancy(self) -> int:
        return max(self.fifo_max_occupancy.values(), default=0)

    @property
    def sim_time_us(self) -> float:
        return self.total_cycles / self.clock_mhz


STATS_COLUMNS = (
    "Ni", "No", "batch", "tile_size", "fifo_depth", "dma_bw", "total_cycles",
    "tmmu_busy", "tmmu_stall", "part_sums", "max_fifo_occupancy", "clock_mhz",
    "sim_time_us",
)


def fmt_float(v: float) -> str:
    return f"{v:.6f}"


def stats_row(s: SimStats) -> dict[str, str]:
    return {
        "Ni": str(s.n_inputs),
        "No": str(s.n_outputs),
        "batch": str(s.batch),
        "tile_size": str(s.tile_size),
        "fifo_depth": str(s.fifo_depth),
        "dma_bw": fmt_float(s.dma_words_per_cycle),
        "total_cycles": str(s.total_cycles),
        "tmmu_busy": str(s.tmmu_busy_cycles),
        "tmmu_stall": str(s.tmmu_stall_cycles),
        "part_sums": str(s.part_sums_emitted),
        "max_fifo_occupancy": str(s.max_fifo_occupancy),
        "clock_mhz": fmt_float(s.clock_mhz),
        "sim_time_us": fmt_float(s.sim_time_us),
    }


def stats_csv(stats: list[SimStats], header: bool = True) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=STATS_COLUMNS, lineterminator="\n")
    if header:
        w.writeheader()
    for s in stats:
        w.writerow(stats_row(s))
    return buf.getvalue()


# ---------------------------------------------------------------------------
# the simulator
# ---------------------------------------------------------------------------

class _Channel:
    """One DMA read channel with fractional per-cycle credit."""

    def __init__(self, rate: Fraction):
        self.rate = rate
        self.credit = Fraction(0)

    def grant(self) -> int:
        self.credit += self.rate
        n = math.floor(self.credit)
        self.credit -= n
        return n

    def idle(self) -> None:
        self.credit = Fraction(0)


class DlauSimulator:
    """One simulation instance; call :meth:`run` once."""

    def __init__(self, cfg: SimConfig, W, X, activation: PwlTable):
        x = as_matrix(X, "X")
        w = as_matrix(W, "W")
        if w.size == 0:
            raise ValueError("weights must be non-empty")
        if x.shape[1] != w.shape[0]:
            raise ShapeError(f"X has {x.shape[1]} columns but W has {w.shape[0]} rows")
        if not isinstance(activation, PwlTable):
            raise TypeError("the activation unit needs a PwlTable")
        self.cfg = cfg
        self.table = activation
        self.T = cfg.tile_size
        self.n_in, self.n_out = w.shape
        self.batch = x.shape[0]
        self.banks = load_weights_banked(w, self.T)
        self.nb = self.banks.n_blocks
        x32 = np.zeros((self.batch, self.nb * self.T), dtype=np.float32)
        x32[:, : self.n_in] = x
        self.x = x32

        self.tmmu_fifo = FifoModel(cfg.fifo_depth, "tmmu->psau")
        self.psau_fifo = FifoModel(cfg.fifo_depth, "psau->afau")
        self.y = np.zeros((self.batch, self.n_out), dtype=np.float32)
        self.stats = SimStats(
            self.n_in, self.n_out, self.batch, self.T, cfg.fifo_depth,
            float(cfg.dma_words_per_cycle), float(cfg.clock_mhz),
        )

        rate = Fraction(cfg.dma_words_per_cycle)
        self.w_chan = _Channel(rate)
        self.x_chan = _Channel(rate)
        # blocks are numbered m = n * nb + b over the whole run
        self.total_blocks = self.batch * self.nb
        self.w_loads = self.nb if cfg.cache_weights else self.total_blocks
        self.w_capacity = self.nb if cfg.cache_weights else 2
        self.w_next = 0          # next block load index
        self.w_words_left = 0    # words still owed for the load in progress
        self.w_ready = set()     # load indices fully resident
        self.w_resident = 0      # loads started and not retired
        self.x_next = 0          # next block whose nodes go into Reg_b
        self.x_words_left = 0
        self.reg_b = None        # block index held in Reg_b once complete
        self.reg_b_loading = False

        self.cur = -1            # active block, -1 = none
        self.col = 0
        self.cur_sums = None
        self.reg_a = None
        self.tree = [None] * cfg.adder_tree_latency

        self.acc = np.zeros(self.n_out, dtype=np.float32)
        self.afau_pipe: deque = deque()
        self.written = 0
        self.progress = False

    # -- units --------------------------------------------------------------

    def _afau(self, c: int) -> None:
        if self.afau_pipe and self.afau_pipe[0][0] <= c:
            _, n, j, v = self.afau_pipe.popleft()
            self.y[n, j] = v
            self.written += 1
            self.progress = True
        if len(self.psau_fifo):
            n, j, v = self.psau_fifo.pop()
            out = np.float32(pwl_sigmoid(self.table, float(v)))
            self.afau_pipe.append((c + self.cfg.afau_latency, n, j, out))
            self.stats.afau_busy_cycles += 1
            self.progress = True

    def _psau(self, c: int) -> None:
        if not len(self.tmmu_fifo):
            return
        n, b, j, ps = self.tmmu_fifo.peek()
        final = b == self.nb - 1
        if final and self.psau_fifo.full:
            self.psau_fifo.stall()
            return
        self.tmmu_fifo.pop()
        self.acc[j] = ps if b == 0 else np.float32(self.acc[j] + ps)
        if final:
            self.psau_fifo.push((n, j, self.acc[j]))
        self.stats.psau_busy_cycles += 1
        self.progress = True

    def _load_index(self, m: int) -> int:
        return m % self.nb if self.cfg.cache_weights else m

    def _tmmu(self, c: int) -> None:
        frozen = False
        tail = self.tree[-1]
        if tail is not None:
            if self.tmmu_fifo.full:
                self.tmmu_fifo.stall()
                frozen = True
            else:
                self.tmmu_fifo.push(tail)
                self.stats.part_sums_emitted += 1
                self.tree[-1] = None
                self.progress = True
        if not frozen:
            self.tree = [None] + self.tree[:-1]

        has_work = self.cur < self.total_blocks - 1 or (self.cur >= 0 and self.col < self.n_out)
        if self.cur < 0 or self.col >= self.n_out:
            self._try_start_block()
        can_issue = self.cur >= 0 and self.col < self.n_out and not frozen
        if can_issue:
            n, b = divmod(self.cur, self.nb)
            self.tree[0] = (n, b, self.col, self.cur_sums[self.col])
            self.col += 1
            self.stats.tmmu_busy_cycles += 1
            if self.stats.first_issue_cycle < 0:
                self.stats.first_issue_cycle = c
            self.progress = True
            if self.col == self.n_out and not self.cfg.cache_weights:
                self.w_ready.discard(self.cur)
                self.w_resident -= 1
        elif has_work and self.stats.first_issue_cycle >= 0:
            self.stats.tmmu_stall_cycles += 1

    def _try_start_block(self) -> None:
        m = self.cur + 1
        if m >= self.total_blocks:
            return
        if self._load_index(m) not in self.w_ready or self.reg_b != m:
            return
        n, b = divmod(m, self.nb)
        self.reg_a, self.reg_b = self.x[n, b * self.T:(b + 1) * self.T], None
        w_block = self.banks.block(b)
        self.cur_sums = pairwise_sum(w_block * self.reg_a[:, None])
        self.cur, self.col = m, 0
        self.progress = True

    def _dma(self, c: int) -> None:
        moved = False
        # weight channel
        if self.w_next < self.w_loads and (self.w_words_left or self.w_resident < self.w_capacity):
            grant = self.w_chan.grant()
            while grant:
                if not self.w_words_left:
                    if self.w_next >= self.w_loads or self.w_resident >= self.w_capacity:
                        break
                    b = self.w_next % self.nb
                    self.w_words_left = self.banks.block_rows(b) * self.n_out
                    self.w_resident += 1
                take = min(grant, self.w_words_left)
                self.w_words_left -= take
                grant -= take
                moved = True
                if not self.w_words_left:
                    self.w_ready.add(self.w_next)
                    self.w_next += 1
        else:
            self.w_chan.idle()

        # node channel fills Reg_b for the block after the active one
        if self.x_next < self.total_blocks and self.reg_b is None:
            if not self.reg_b_loading:
                self.reg_b_loading = True
                self.x_words_left = self.banks.block_rows(self.x_next % self.nb)
            grant = self.x_chan.grant()
            take = min(grant, self.x_words_left)
            if take:
                self.x_words_left -= take
                moved = True
            if not self.x_words_left:
                self.reg_b = self.x_next
                self.reg_b_loading = False
                self.x_next += 1
        else:
            self.x_chan.idle()

        if moved:
            self.stats.dma_cycles += 1
            self.progress = True

    # -- driver -------------------------------------------------------------

    def _dump(self, c: int) -> str:
        return (
            f"cycle={c} block={self.cur}/{self.total_blocks} col={self.col} "
            f"w_next={self.w_next} w_ready={sorted(self.w_ready)} w_resident={self.w_resident} "
            f"reg_b={self.reg_b} x_next={self.x_next} tree={[t is not None for t in self.tree]} "
            f"tmmu_fifo={len(self.tmmu_fifo)} psau_fifo={len(self.psau_fifo)} "
            f"afau_pipe={len(self.afau_pipe)} written={self.written}"
        )

    def run(self):
        target = self.batch * self.n_out
        patience = (
            math.ceil(2 / self.cfg.dma_words_per_cycle)
            + self.cfg.adder_tree_latency + self.cfg.afau_latency + 16
        )
        idle = 0
        c = 0
        while self.written < target:
            self.progress = False
            self._afau(c)
            self._psau(c)
            self._tmmu(c)
            self._dma(c)
            idle = 0 if self.progress else idle + 1
            if idle > patience:
                raise SimulationDeadlock(f"no progress for {idle} cycles: {self._dump(c)}")
            c += 1
        self.stats.total_cycles = c
        self.stats.fifo_max_occupancy = {
            self.tmmu_fifo.name: self.tmmu_fifo.max_occupancy,
            self.psau_fifo.name: self.psau_fifo.max_occupancy,
        }
        return self.y, self.stats


def sim_run(cfg: SimConfig, W, X, activation: PwlTable):
    """Simulate one layer. Returns (Y float32 batch x No, SimStats)."""
    return DlauSimulator(cfg, W, X, activation).run()


def config_fields() -> list[str]:
    return [f.name for f in fields(SimConfig)]
