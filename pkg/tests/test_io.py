import struct

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from dlau.io import (
    BadMagicError, ConfigValueError, MissingKeyError, NonFiniteTensorError, RunConfig,
    TensorFileError, TruncatedTensorError, UnknownKeyError, UnsupportedTensorError,
    decode_tensor, dump_run_config, encode_tensor, gen_synthetic, load_run_config,
    read_tensor, write_tensor,
)
from dlau.tensor import Tensor2D

finite_f32 = st.floats(width=32, allow_nan=False, allow_infinity=False)


@given(arrays(np.float32, st.tuples(st.integers(1, 6), st.integers(1, 6)), elements=finite_f32))
def test_round_trip_bit_exact(a):
    back = decode_tensor(encode_tensor(a))
    assert back.data.tobytes() == a.tobytes()


def test_round_trip_file(tmp_path):
    t = gen_synthetic(5, 7, 3)
    write_tensor(tmp_path / "t.dlt", t)
    assert read_tensor(tmp_path / "t.dlt") == t


def test_header_bytes():
    buf = encode_tensor(np.zeros((2, 3)))
    assert buf[:17] == b"DLT1" + bytes.fromhex("02000000" "02000000" "03000000" "01")
    assert len(buf) == 17 + 24


def test_payload_little_endian():
    buf = encode_tensor([[1.0, -2.0]])
    assert buf[17:] == struct.pack("<ff", 1.0, -2.0)


def test_bad_magic(tmp_path):
    p = tmp_path / "bad.dlt"
    p.write_bytes(b"XXXX" + encode_tensor(np.zeros((1, 1)))[4:])
    with pytest.raises(BadMagicError):
        read_tensor(p)


@pytest.mark.parametrize("cut", [5, 12, 17, 20])
def test_truncated(cut):
    buf = encode_tensor(np.ones((2, 2)))
    with pytest.raises(TruncatedTensorError):
        decode_tensor(buf[:cut])


def test_non_finite_rejected_both_ways():
    with pytest.raises(NonFiniteTensorError):
        encode_tensor([[np.nan]])
    buf = bytearray(encode_tensor([[0.0]]))
    buf[17:] = struct.pack("<f", float("inf"))
    with pytest.raises(NonFiniteTensorError):
        decode_tensor(bytes(buf))


def test_unsupported_dtype_and_rank():
    buf = bytearray(encode_tensor([[0.0]]))
    buf[16] = 2
    with pytest.raises(UnsupportedTensorError):
        decode_tensor(bytes(buf))
    with pytest.raises(UnsupportedTensorError):
        decode_tensor(b"DLT1" + struct.pack("<I", 3) + b"\0" * 20)


def test_trailing_bytes():
    with pytest.raises(TensorFileError):
        decode_tensor(encode_tensor([[0.0]]) + b"\0")


def test_error_variants_distinct():
    kinds = {BadMagicError, TruncatedTensorError, NonFiniteTensorError}
    assert len(kinds) == 3 and all(issubclass(k, TensorFileError) for k in kinds)


def test_tensor2d_validation():
    with pytest.raises(ValueError):
        Tensor2D(np.zeros(3))
    with pytest.raises(ValueError):
        Tensor2D([[np.inf]])
    t = Tensor2D([[1, 2, 3]])
    assert (t.rows, t.cols) == (1, 3) and t.data.dtype == np.float32


# -- synthetic data ------------------------------------------------------------

def test_gen_deterministic_and_in_range():
    a = gen_synthetic(30, 20, 9)
    assert a == gen_synthetic(30, 20, 9)
    assert a.data.min() >= -0.5 and a.data.max() < 0.5


def test_gen_seeds_differ_golden():
    a, b = gen_synthetic(2, 3, 1), gen_synthetic(2, 3, 2)
    # top 24 bits of the first SplitMix64 output: seed 1 -> 0x910A2D..., seed 2 -> 0x975835...
    assert a.data[0, 0] == np.float32(0x910A2D / 2**24 - 0.5)
    assert b.data[0, 0] == np.float32(0x975835 / 2**24 - 0.5)


def test_gen_first_value_from_seed_zero():
    # SplitMix64(0) first output 0xE220A8397B1DCDAF
    assert gen_synthetic(1, 1, 0).data[0, 0] == np.float32(0xE220A8 / 2**24 - 0.5)


def test_gen_rejects_empty():
    with pytest.raises(ValueError):
        gen_synthetic(0, 3, 1)


# -- config ----------------------------------------------------------------------

def test_defaults_from_flags_only(tmp_path):
    p = tmp_path / "empty.cfg"
    p.write_text("")
    cfg = load_run_config(p, {"ni": 64, "no": 32})
    assert cfg == RunConfig(ni=64, no=32)
    assert (cfg.tile_size, cfg.fifo_depth, cfg.dma_words_per_cycle, cfg.pwl_k, cfg.clock_mhz) == (
        32, 64, 32.0, 0.5, 200.0,
    )


def test_parse_tile_size(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("# comment\nni = 16\nno = 8\ntile_size = 8   # inline\n")
    cfg = load_run_config(p)
    assert cfg.tile_size == 8 and cfg.fifo_depth == 64


def test_flags_override_file(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("ni = 16\nno = 8\ntile_size = 8\n")
    assert load_run_config(p, {"tile_size": 4, "seed": None}).tile_size == 4


def test_bad_value_names_key(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("ni = 4\nno = 4\ntile_size = banana\n")
    with pytest.raises(ConfigValueError, match="tile_size") as exc:
        load_run_config(p)
    assert exc.value.key == "tile_size"


def test_unknown_key():
    with pytest.raises(UnknownKeyError) as exc:
        load_run_config(None, {"ni": 1, "no": 1, "tiles": 3})
    assert exc.value.key == "tiles"


def test_missing_dims():
    with pytest.raises(MissingKeyError) as exc:
        load_run_config(None, {"ni": 4})
    assert exc.value.key == "no"


def test_layers_supply_dims():
    cfg = load_run_config(None, {"layers": "784,256,10"})
    assert (cfg.ni, cfg.no, cfg.layers) == (784, 256, (784, 256, 10))


@pytest.mark.parametrize(
    "bad",
    [
        {"tile_size": 0}, {"pwl_k": 0.3}, {"dma_words_per_cycle": 0.0625}, {"batch": 1.5},
        {"cache_weights": "maybe"}, {"adder_tree_latency": 2}, {"clock_mhz": -1}, {"seed": -3},
    ],
)
def test_invalid_values(bad):
    with pytest.raises(ConfigValueError):
        load_run_config(None, {"ni": 8, "no": 8, **bad})


def test_malformed_line(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("ni 4\n")
    with pytest.raises(ConfigValueError):
        load_run_config(p)


def test_dump_round_trip(tmp_path):
    cfg = load_run_config(None, {"ni": 8, "no": 4, "cache_weights": "true", "layers": "8,4"})
    p = tmp_path / "c.cfg"
    p.write_text(dump_run_config(cfg))
    assert load_run_config(p) == cfg


@given(st.text(alphabet="abcdefgh_=0123456789.# \n", max_size=80))
def test_config_parsing_is_total(text):
    import tempfile, os

    fd, path = tempfile.mkstemp()
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    try:
        try:
            cfg = load_run_config(path)
        except ConfigValueError:
            return
        except UnknownKeyError:
            return
        except MissingKeyError:
            return
        assert isinstance(cfg, RunConfig) and cfg.ni >= 1 and cfg.no >= 1
    finally:
        os.unlink(path)
