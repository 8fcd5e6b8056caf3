import re

import pytest

from graphsim.graph import build_graph

# Acceptance criteria register their verdicts here; printed at session end.
ACCEPTANCE_RESULTS: dict[str, tuple[bool, str]] = {}


def record_acceptance(key: str, passed: bool, detail: str) -> None:
    ACCEPTANCE_RESULTS[key] = (passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS, key=lambda k: (int(re.match(r"\d+", k).group()), k)):
        passed, detail = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] criterion {key}: {detail}")


# Figure graphs (n = 7).  Edge order is the figure's e1..e12.
FIG4A_EDGES = [
    (1, 2), (1, 3), (1, 4), (1, 5), (2, 7), (3, 6),
    (2, 4), (3, 7), (4, 6), (4, 7), (5, 6), (5, 7),
]


@pytest.fixture
def fig4a_graph():
    return build_graph(7, FIG4A_EDGES)


@pytest.fixture
def cycle8():
    return build_graph(8, [(v, v % 8 + 1) for v in range(1, 9)])


@pytest.fixture
def two_cliques():
    """Two 4-cliques joined by the bridge (4, 5)."""
    edges = [(a, b) for a in range(1, 5) for b in range(a + 1, 5)]
    edges += [(a, b) for a in range(5, 9) for b in range(a + 1, 9)]
    return build_graph(8, edges + [(4, 5)])
