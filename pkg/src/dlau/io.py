"""DLT1 tensor files, key = value run configs, synthetic data.

DLT1 layout (all integers little-endian)::

    b"DLT1" | rank:u32 (=2) | dims: rank x u32 | dtype:u8 (1 = f32 LE) | payload

The payload is the row-major float32 values, 4 * rows * cols bytes.
"""

from __future__ import annotations

import struct
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .prng import SplitMix64
from .pwl import VALID_K
from .tensor import Tensor2D

MAGIC = b"DLT1"
DTYPE_F32 = 1


class TensorFileError(Exception):
    """Base class for DLT1 read/write failures."""


class BadMagicError(TensorFileError):
    pass


class TruncatedTensorError(TensorFileError):
    pass


class UnsupportedTensorError(TensorFileError):
    """Rank or dtype code the format does not define."""


class NonFiniteTensorError(TensorFileError):
    pass


def encode_tensor(t) -> bytes:
    arr = np.asarray(t, dtype=np.float32)
    if arr.ndim != 2:
        raise UnsupportedTensorError(f"only rank-2 tensors are supported, got rank {arr.ndim}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteTensorError("refusing to write NaN or Inf values")
    header = MAGIC + struct.pack("<III", 2, *arr.shape) + struct.pack("<B", DTYPE_F32)
    return header + arr.astype("<f4").tobytes(order="C")


def decode_tensor(buf: bytes) -> Tensor2D:
    if len(buf) < 4 or buf[:4] != MAGIC:
        raise BadMagicError(f"bad magic {buf[:4]!r}, expected {MAGIC!r}")
    if len(buf) < 8:
        raise TruncatedTensorError("header ends before the rank field")
    (rank,) = struct.unpack_from("<I", buf, 4)
    if rank != 2:
        raise UnsupportedTensorError(f"rank {rank} is not supported")
    if len(buf) < 8 + 4 * rank + 1:
        raise TruncatedTensorError("header ends before dims/dtype")
    dims = struct.unpack_from(f"<{rank}I", buf, 8)
    (dtype,) = struct.unpack_from("<B", buf, 8 + 4 * rank)
    if dtype != DTYPE_F32:
        raise UnsupportedTensorError(f"dtype code {dtype} is not supported")
    offset = 8 + 4 * rank + 1
    want = 4 * dims[0] * dims[1]
    have = len(buf) - offset
    if have < want:
        raise TruncatedTensorError(f"payload has {have} bytes, header promises {want}")
    if have > want:
        raise TensorFileError(f"{have - want} trailing bytes after payload")
    arr = np.frombuffer(buf, dtype="<f4", count=dims[0] * dims[1], offset=offset)
    arr = arr.reshape(dims).astype(np.float32)
    if not np.all(np.isfinite(arr)):
        raise NonFiniteTensorError("tensor file contains NaN or Inf")
    return Tensor2D(arr)


def write_tensor(path, t) -> None:
    Path(path).write_bytes(encode_tensor(t))


def read_tensor(path) -> Tensor2D:
    return decode_tensor(Path(path).read_bytes())


def gen_synthetic(rows: int, cols: int, seed: int) -> Tensor2D:
    """rows x cols values uniform in [-0.5, 0.5), drawn row-major from SplitMix64(seed)."""
    if rows < 1 or cols < 1:
        raise ValueError(f"rows and cols must be >= 1, got {rows}x{cols}")
    return Tensor2D(SplitMix64(seed).uniform_f32(rows * cols).reshape(rows, cols))


# ---------------------------------------------------------------------------
# run configuration
# ---------------------------------------------------------------------------

class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(message)
        self.key = key


class UnknownKeyError(ConfigError):
    pass


class ConfigValueError(ConfigError):
    pass


class MissingKeyError(ConfigError):
    pass


@dataclass(frozen=True)
class RunConfig:
    ni: int
    no: int
    batch: int = 1
    tile_size: int = 32
    fifo_depth: int = 64
    dma_words_per_cycle: float = 32.0
    pwl_k: float = 0.5
    seed: int = 0
    clock_mhz: float = 200.0
    adder_tree_latency: int | None = None
    afau_latency: int = 3
    cache_weights: bool = False
    layers: tuple[int, ...] | None = None

    def sim_config(self):
        from .sim import SimConfig

        return SimConfig(
            tile_size=self.tile_size,
            fifo_depth=self.fifo_depth,
            dma_words_per_cycle=self.dma_words_per_cycle,
            adder_tree_latency=self.adder_tree_latency,
            afau_latency=self.afau_latency,
            clock_mhz=self.clock_mhz,
            cache_weights=self.cache_weights,
        )


def _parse_bool(key, text):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigValueError(key, f"{key}: expected a boolean, got {text!r}")


def _parse_layers(key, text):
    try:
        sizes = tuple(int(p) for p in str(text).split(","))
    except ValueError:
        raise ConfigValueError(key, f"{key}: expected comma-separated integers, got {text!r}") from None
    return sizes


_PARSERS = {
    "ni": int, "no": int, "batch": int, "tile_size": int, "fifo_depth": int,
    "dma_words_per_cycle": float, "pwl_k": float, "seed": int, "clock_mhz": float,
    "adder_tree_latency": int, "afau_latency": int,
}
_COUNTS = ("ni", "no", "batch", "tile_size", "fifo_depth", "afau_latency", "adder_tree_latency")


def _coerce(key: str, value):
    if key == "cache_weights":
        return value if isinstance(value, bool) else _parse_bool(key, str(value))
    if key == "layers":
        return tuple(value) if isinstance(value, (list, tuple)) else _parse_layers(key, value)
    parse = _PARSERS[key]
    if isinstance(value, str):
        try:
            value = parse(value.strip())
        except ValueError:
            raise ConfigValueError(key, f"{key}: expected {parse.__name__}, got {value!r}") from None
    if parse is int and isinstance(value, float) and not value.is_integer():
        raise ConfigValueError(key, f"{key}: expected an integer, got {value!r}")
    return parse(value)


def parse_config_text(text: str) -> dict:
    """Parse ``key = value`` lines; '#' starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigValueError("", f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (p.strip() for p in line.split("=", 1))
        out[key] = value
    return out


def load_run_config(path=None, overrides: dict | None = None) -> RunConfig:
    """Build a RunConfig from an optional file plus overriding values.

    Override entries whose value is None are ignored so argparse namespaces
    can be passed straight through.
    """
    known = {f.name for f in fields(RunConfig)}
    raw = parse_config_text(Path(path).read_text()) if path is not None else {}
    raw.update({k: v for k, v in (overrides or {}).items() if v is not None})
    for key in raw:
        if key not in known:
            raise UnknownKeyError(key, f"unknown config key {key!r}")
    vals = {k: _coerce(k, v) for k, v in raw.items()}

    layers = vals.get("layers")
    if layers is not None:
        if len(layers) < 2:
            raise ConfigValueError("layers", "layers: need at least two sizes")
        vals.setdefault("ni", layers[0])
        vals.setdefault("no", layers[1])
    for key in ("ni", "no"):
        if key not in vals:
            raise MissingKeyError(key, f"missing required network dimension {key!r}")

    for key in _COUNTS:
        if vals.get(key) is not None and vals[key] < 1:
            raise ConfigValueError(key, f"{key}: must be >= 1, got {vals[key]}")
    if layers is not None and any(s < 1 for s in layers):
        raise ConfigValueError("layers", f"layers: sizes must be >= 1, got {layers}")
    if "pwl_k" in vals and vals["pwl_k"] not in VALID_K:
        raise ConfigValueError("pwl_k", f"pwl_k: must be one of {VALID_K}, got {vals['pwl_k']}")
    if vals.get("dma_words_per_cycle", 32.0) < 0.125:
        raise ConfigValueError("dma_words_per_cycle", "dma_words_per_cycle: must be >= 0.125")
    if vals.get("clock_mhz", 200.0) <= 0:
        raise ConfigValueError("clock_mhz", "clock_mhz: must be positive")
    if vals.get("seed", 0) < 0:
        raise ConfigValueError("seed", "seed: must be non-negative")
    cfg = RunConfig(**vals)
    try:
        cfg.sim_config()
    except ValueError as exc:
        raise ConfigValueError("adder_tree_latency", str(exc)) from None
    return cfg


def dump_run_config(cfg: RunConfig) -> str:
    lines = []
    for key, value in asdict(cfg).items():
        if value is None:
            continue
        if key == "layers":
            value = ",".join(str(s) for s in value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"
