import numpy as np
import pytest

from levy_passage.measures import NO_JUMPS, Atoms, GammaMixture, PowerTail
from levy_passage.model import ProcessSpec


@pytest.fixture
def brownian():
    return ProcessSpec(1.0, NO_JUMPS)


@pytest.fixture
def cramer_lundberg():
    # unit-rate Exp(1) claims against premium 3: E(X_1) = -2
    return ProcessSpec(3.0, GammaMixture(((1.0, 1.0, 0),)))


@pytest.fixture
def two_sided():
    return ProcessSpec(1.0, Atoms(((-0.5, 0.2), (1.0, 0.5))))


@pytest.fixture
def power_tail():
    return ProcessSpec(1.25, PowerTail(1.0, 6.0, 1.0))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
