import numpy as np
import pytest

from kbiclust import build_matrix

ACCEPTANCE_LINES = {}


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def checkerboard():
    """12 x 10 matrix of constant 2x2 blocks: exact duplicate rows and columns per group."""
    rows = np.repeat([0, 1], [7, 5])
    cols = np.repeat([0, 1], [4, 6])
    levels = np.array([[0.0, 3.0], [5.0, 1.0]])
    values = levels[rows][:, cols]
    return build_matrix(values), rows, cols


@pytest.fixture
def record_acceptance():
    def record(number, passed, detail):
        status = "SKIP" if passed is None else "PASS" if passed else "FAIL"
        ACCEPTANCE_LINES[number] = f"criterion {number:>2}: {status}  {detail}"
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])
