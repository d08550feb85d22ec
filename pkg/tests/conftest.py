import numpy as np
import pytest

from dlau.prng import SplitMix64


def random_matrix(rng: SplitMix64, rows: int, cols: int) -> np.ndarray:
    return rng.uniform_f32(rows * cols).reshape(rows, cols).astype(np.float64)


@pytest.fixture
def rng():
    return SplitMix64(12345)


def pytest_terminal_summary(terminalreporter):
    import sys

    acceptance = sys.modules.get("test_acceptance")
    if acceptance is None or not acceptance.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(acceptance.RESULTS):
        terminalreporter.write_line(line)
