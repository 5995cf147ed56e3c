import numpy as np
import pytest

from solwave import model as md
from solwave import spectral as sp


def kdv_soliton(grid, c=1.0):
    """(c/2) sech^2(sqrt(c) x / 2): solves u'' = c u - 3u^2, speed nu = -c."""
    return sp.Field(grid, 0.5 * c / np.cosh(0.5 * np.sqrt(c) * grid.x) ** 2)


@pytest.fixture
def kdv_model():
    return md.fkdv_symbol(2.0), md.make_nonlinearity("A1", 3.0, 1.0)


@pytest.fixture
def whitham_model():
    return md.whitham_symbol(0.5), md.make_nonlinearity("A1", 1.0, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance lines collected by test_acceptance.py and repeated after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
