import numpy as np
import pytest
from hypothesis import settings

from randlift.graph import complete_graph, cycle_graph, make_graph

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def K2():
    return complete_graph(2)


@pytest.fixture
def K3():
    return complete_graph(3)


@pytest.fixture
def path3():
    return make_graph(3, [(1, 2), (2, 3)])


@pytest.fixture
def C5():
    return cycle_graph(5)


@pytest.fixture
def rng():
    return np.random.default_rng(20261019)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
