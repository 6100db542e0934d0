import numpy as np
import pytest

from supercrit.evolve import FieldState
from supercrit.exponents import ModelParams
from supercrit.grid import build_basis, build_grid


def gaussian(grid, amplitude=1.0, width=1.0):
    return FieldState(0.0, amplitude * np.exp(-0.5 * (grid.nodes / width) ** 2),
                      np.zeros(grid.N))


def bump(grid, amplitude=1.0, width=1.0, center=0.0):
    s = (grid.nodes - center) / width
    return FieldState(0.0, amplitude * np.where(np.abs(s) < 1, (1 - s**2) ** 3, 0.0),
                      np.zeros(grid.N))


@pytest.fixture(scope="session")
def std_params():
    return ModelParams(3, 6.0)


@pytest.fixture(scope="session")
def grid_small():
    return build_grid(20.0, 256, 3)


@pytest.fixture(scope="session")
def basis_small(grid_small):
    return build_basis(grid_small)


@pytest.fixture(scope="session")
def grid_std():
    return build_grid(20.0, 1024, 3)


@pytest.fixture(scope="session")
def basis_std(grid_std):
    return build_basis(grid_std)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
