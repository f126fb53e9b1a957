import numpy as np
import pytest

from motbench.core_types import BoxTable


def table(rows):
    """BoxTable from (frame, id, left, top, width, height[, score, class, vis]) tuples."""
    full = []
    for r in rows:
        r = tuple(r) + (1.0, 1, 1.0)[len(r) - 6 :] if len(r) < 9 else tuple(r)
        full.append(r)
    if not full:
        return BoxTable.empty()
    a = np.array(full, dtype=float)
    return BoxTable.from_columns(a[:, 0], a[:, 1], a[:, 2:6], a[:, 6], a[:, 7], a[:, 8])


def results(rows):
    """Tracker-result table: score 1, class and visibility absent."""
    return table([tuple(r[:6]) + (1.0, -1, -1.0) for r in rows])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LOG: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LOG:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LOG:
            terminalreporter.write_line(line)
