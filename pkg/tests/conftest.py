import numpy as np
import pytest

from rmtgrf.mesh import build_mesh


@pytest.fixture(scope="session")
def mesh():
    return build_mesh()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
