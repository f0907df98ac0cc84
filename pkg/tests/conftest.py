import pytest

from bellpost.causal_graph import CausalGraph

# lines collected by the acceptance suite, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def berkson_graph():
    return CausalGraph(["B", "T", "C"], [("B", "C"), ("T", "C")])


@pytest.fixture
def two_route_graph():
    # X -> A -> Y and X -> B <- Y with B -> C
    return CausalGraph(
        ["X", "Y", "A", "B", "C"],
        [("X", "A"), ("A", "Y"), ("X", "B"), ("Y", "B"), ("B", "C")],
    )
