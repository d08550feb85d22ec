"""Piecewise-linear sigmoid as evaluated by the activation unit.

Positive inputs in (0, 8] use slope/intercept tables indexed by
``floor(x / k)``; negative inputs in (-8, 0] mirror them as ``1 + a*x - b``
with index ``floor(-x / k)``; outside that range the output saturates to
0 or 1.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .nn_core import sigmoid_exact

SATURATION = 8.0
VALID_K = (8.0, 4.0, 2.0, 1.0, 0.5, 0.25, 0.125)
DEFAULT_K = 0.5


@dataclass(frozen=True)
class PwlTable:
    k: float
    a: tuple[float, ...]
    b: tuple[float, ...]

    def __post_init__(self):
        n = SATURATION / self.k
        if self.k <= 0 or n != int(n):
            raise ValueError(f"segment width k={self.k} must divide {SATURATION}")
        if len(self.a) != int(n) or len(self.b) != int(n):
            raise ValueError(
                f"tables must have {int(n)} entries, got a={len(self.a)} b={len(self.b)}"
            )
        if not all(s > 0 for s in self.a):
            raise ValueError("all slopes must be positive")
        if self.b[0] != 0.5:
            raise ValueError(f"b[0] must be 0.5, got {self.b[0]}")

    @property
    def segments(self) -> int:
        return len(self.a)

    def __call__(self, x):
        return pwl_sigmoid(self, x)


def build_pwl_table(k: float = DEFAULT_K) -> PwlTable:
    """Chord-interpolate the exact sigmoid on width-``k`` segments of [0, 8]."""
    if k not in VALID_K:
        raise ValueError(f"unsupported segment width k={k}; choose one of {VALID_K}")
    n = int(SATURATION / k)
    a, b = [], []
    for i in range(n):
        lo, hi = i * k, (i + 1) * k
        slope = (float(sigmoid_exact(hi)) - float(sigmoid_exact(lo))) / k
        a.append(slope)
        b.append(float(sigmoid_exact(lo)) - slope * lo)
    # sigma(0) - slope*0 is exactly 0.5, but keep it literal
    b[0] = 0.5
    return PwlTable(k=float(k), a=tuple(a), b=tuple(b))


def pwl_sigmoid(table: PwlTable, x):
    """Evaluate the table. Scalars in, float out; arrays in, float64 array out."""
    xa = np.asarray(x, dtype=np.float64)
    a = np.asarray(table.a)
    b = np.asarray(table.b)
    last = table.segments - 1

    mag = np.minimum(np.abs(xa), SATURATION)
    # x == 8 exactly would index one past the table
    idx = np.minimum(np.floor(mag / table.k), last).astype(np.int64)
    pos = a[idx] * xa + b[idx]
    neg = 1.0 + a[idx] * xa - b[idx]

    out = np.where(xa > 0, pos, neg)
    out = np.where(xa > SATURATION, 1.0, out)
    out = np.where(xa <= -SATURATION, 0.0, out)
    out = np.clip(out, 0.0, 1.0)
    if np.ndim(x) == 0:
        return float(out)
    return out


def pwl_max_error(table: PwlTable, samples: int = 100_000, lo: float = -10.0, hi: float = 10.0):
    """Max |pwl - sigmoid| over a uniform grid. Returns (error, location)."""
    if samples < 1000:
        raise ValueError(f"samples must be >= 1000, got {samples}")
    xs = np.linspace(lo, hi, samples)
    err = np.abs(pwl_sigmoid(table, xs) - sigmoid_exact(xs))
    i = int(np.argmax(err))
    return float(err[i]), float(xs[i])


def export_table_csv(table: PwlTable, path) -> None:
    """Columns: segment_index, x_lo, x_hi, a, b."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["segment_index", "x_lo", "x_hi", "a", "b"])
        for i, (ai, bi) in enumerate(zip(table.a, table.b)):
            w.writerow([i, repr(i * table.k), repr((i + 1) * table.k), repr(ai), repr(bi)])


def segment_slope(table: PwlTable, x) -> np.ndarray:
    """d/dx of the table output (0 in the saturated regions)."""
    xa = np.asarray(x, dtype=np.float64)
    a = np.asarray(table.a)
    last = table.segments - 1
    mag = np.minimum(np.abs(xa), SATURATION)
    idx = np.minimum(np.floor(mag / table.k), last).astype(np.int64)
    slope = a[idx]
    saturated = (xa > SATURATION) | (xa <= -SATURATION)
    return np.where(saturated, 0.0, slope)
