import numpy as np
import pytest

from chanrel import channels as ch
from chanrel.optimizer import OptimizerConfig


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def n0():
    return ch.randomize_zero()


@pytest.fixture(scope="session")
def dep2():
    return ch.depolarizing(2)


@pytest.fixture(scope="session")
def small_cfg():
    """Reduced search budget for unit tests; acceptance tests use the defaults."""
    return OptimizerConfig(restarts=8)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import LINES
    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
