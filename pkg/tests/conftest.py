import math

import numpy as np
import pytest
from hypothesis import strategies as st

from sftlab import new_sft
from sftlab.io import full_shift_system, golden_mean_system
from sftlab.reports import prepare

PHI = (1 + math.sqrt(5)) / 2


@pytest.fixture(scope="session")
def golden():
    return prepare(golden_mean_system(), "g")


@pytest.fixture(scope="session")
def full2():
    return prepare(full_shift_system(2), "g")


def mixing_matrix(n, rng):
    """Random 0/1 matrix on ``n`` symbols that is primitive (has a self-loop and is strongly connected)."""
    while True:
        a = (rng.random((n, n)) < 0.55).astype(int)
        for i in range(n):
            a[i, (i + 1) % n] = 1  # Hamiltonian cycle
        a[0, 0] = 1
        if np.all(np.linalg.matrix_power(a, n * n) > 0):
            return a


@st.composite
def mixing_sfts(draw, max_symbols=4):
    n = draw(st.integers(2, max_symbols))
    seed = draw(st.integers(0, 2**32 - 1))
    return new_sft(n, mixing_matrix(n, np.random.default_rng(seed)).tolist())


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines.items()):
            terminalreporter.write_line(line)
