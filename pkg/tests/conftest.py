import pytest

from hypersl.cgs import CGS


def one_state(labels=("a",), n_agents=1, n_actions=2):
    npf = n_actions ** n_agents
    return CGS(1, 0, [f"ag{i}" for i in range(n_agents)], [f"m{i}" for i in range(n_actions)],
               [set(labels)], [[0] * npf], aps=["a", "b", "g"])


def chain(n=2, goal="g"):
    """Agent 0 moves right with m1 and stays with m0; the last state is absorbing."""
    table = [[s, min(s + 1, n - 1)] for s in range(n)]
    labels = [set() for _ in range(n)]
    labels[-1] = {goal}
    return CGS(n, 0, ["ag0"], ["m0", "m1"], labels, table, aps=["a", "g"])


def toggle():
    """Two states; every profile flips the state."""
    return CGS(2, 0, ["ag0"], ["m0", "m1"], [{"a"}, set()], [[1, 1], [0, 0]], aps=["a"])


@pytest.fixture
def single():
    return one_state()


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
