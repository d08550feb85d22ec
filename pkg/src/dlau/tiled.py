"""Untimed tiled matrix-vector engine.

The input vector is split into tiles of ``tile_size`` neurons; each tile's
part sum is accumulated into the running output and the activation is
applied once, after the last tile. Only the weight rows of the current tile
are read while that tile is processed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Union

import numpy as np

from .nn_core import ShapeError, sigmoid_exact
from .pwl import PwlTable, pwl_sigmoid
from .tensor import as_matrix

Activation = Union[PwlTable, str, None, Callable[[np.ndarray], np.ndarray]]


class TileRange(NamedTuple):
    start: int
    end: int

    def __len__(self):
        return self.end - self.start


@dataclass(frozen=True)
class TileConfig:
    tile_size: int
    batch_size: int = 1

    def __post_init__(self):
        if self.tile_size < 1:
            raise ValueError(f"tile_size must be >= 1, got {self.tile_size}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")


def tile_partition(n_inputs: int, tile_size: int) -> list[TileRange]:
    if n_inputs < 1:
        raise ValueError(f"number of inputs must be >= 1, got {n_inputs}")
    if tile_size < 1:
        raise ValueError(f"tile_size must be >= 1, got {tile_size}")
    return [TileRange(k, min(k + tile_size, n_inputs)) for k in range(0, n_inputs, tile_size)]


def resolve_activation(activation: Activation) -> Callable[[np.ndarray], np.ndarray]:
    """Map an activation choice to a callable.

    ``"exact"`` is the logistic function, a :class:`PwlTable` the table lookup,
    ``None`` / ``"linear"`` the identity, and any callable is used as is.
    """
    if activation is None or activation == "linear":
        return lambda z: z
    if isinstance(activation, str):
        if activation == "exact":
            return sigmoid_exact
        raise ValueError(f"unknown activation {activation!r}")
    if isinstance(activation, PwlTable):
        # re-run table validation in case it was built by hand
        PwlTable(activation.k, tuple(activation.a), tuple(activation.b))
        return lambda z: pwl_sigmoid(activation, z)
    if callable(activation):
        return activation
    raise ValueError(f"invalid activation {activation!r}")


def tiled_forward(W, X, cfg: TileConfig, activation: Activation = "exact") -> np.ndarray:
    """Tiled forward pass: returns the batch x No activated outputs.

    ``W`` only needs ``shape`` and slice indexing, so callers may wrap it to
    observe which rows are read.
    """
    x = as_matrix(X, "X")
    n_in, n_out = W.shape
    if x.shape[1] != n_in:
        raise ShapeError(f"X has {x.shape[1]} columns but W has {n_in} rows")
    if cfg.batch_size != x.shape[0]:
        raise ShapeError(f"cfg.batch_size={cfg.batch_size} but X has {x.shape[0]} rows")
    f = resolve_activation(activation)
    tiles = tile_partition(n_in, cfg.tile_size)

    y = np.zeros((x.shape[0], n_out))
    for n in range(x.shape[0]):
        acc = np.zeros(n_out)
        for tile in tiles:
            w_tile = np.asarray(W[tile.start:tile.end], dtype=np.float64)
            for r, i in enumerate(range(tile.start, tile.end)):
                acc += w_tile[r] * x[n, i]
        y[n] = f(acc)
    return y
