import numpy as np
import pytest

from mkdvlab.profiles import gaussian
from mkdvlab.spectral import RealField, make_grid


@pytest.fixture
def grid2pi():
    return make_grid(2 * np.pi, 32)


@pytest.fixture
def ref_grid():
    return make_grid(64 * np.pi, 1024)


@pytest.fixture
def gauss(ref_grid):
    return gaussian(ref_grid, 0.5, 2.0)


def field_of(grid, f):
    return RealField(grid, f(grid.x))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
