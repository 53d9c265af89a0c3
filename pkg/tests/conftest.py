import sys

import numpy as np
import pytest

from vofdm.numerics import RngStream


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def stream():
    return RngStream(2024, 0)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("tests.test_acceptance") or sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
