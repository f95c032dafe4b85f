import numpy as np
import pytest

from homtype import fixtures
from homtype.dyadic import build_grid

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def path4():
    return fixtures.path(4)


@pytest.fixture(scope="session")
def dy4(path4):
    return build_grid(path4, 0.5, seed=0)


@pytest.fixture(scope="session")
def rand64():
    return fixtures.rand2d(64, seed=0)


@pytest.fixture(scope="session")
def rand64_grids(rand64):
    return [build_grid(rand64, 0.5, seed=0), build_grid(rand64, 0.25, seed=7)]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
