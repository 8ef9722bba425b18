import pytest
from hypothesis import HealthCheck, settings

from mmstate.topology import Graph

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# acceptance verdict lines, printed once at the end of the session
ACCEPTANCE_LINES = []


def path_graph(n):
    return Graph.from_edges([(i, i + 1) for i in range(n - 1)], n)


@pytest.fixture
def path3():
    return path_graph(3)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
