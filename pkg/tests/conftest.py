import numpy as np
import pytest

from rhmbandit.env import EnvironmentSpec
from rhmbandit.geometry import Hypercube
from rhmbandit.harness.presets import load_preset


@pytest.fixture(scope="session")
def spec_1a():
    return load_preset("1a").sample(np.random.default_rng(0))


@pytest.fixture(scope="session")
def spec_2a():
    return load_preset("2a").sample(np.random.default_rng(0))


@pytest.fixture
def tiny_spec():
    """Two states, two arms, singleton and pair θ families on the unit square."""
    P = np.array([[0.7, 0.3], [0.4, 0.6]])
    thetas = [[[[1.0, 0.0]], [[0.0, 2.0], [3.0, 1.0]]],
              [[[-1.0, 1.0], [2.0, 2.0]], [[0.0, -1.0]]]]
    probs = [[[1.0], [0.5, 0.5]], [[0.25, 0.75], [1.0]]]
    return EnvironmentSpec(P, thetas, probs, Hypercube.unit(2))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
