import numpy as np
import pytest

from duopoly_bandits.instances import RealizationTable


def make_table(W, t_max: int) -> RealizationTable:
    return RealizationTable(np.ascontiguousarray(W, dtype=np.uint8), t_max)


def constant_table(mu, rows: int, t_max: int) -> RealizationTable:
    """Deterministic table: column ``a`` is all ``mu[a]`` (each 0 or 1)."""
    return make_table(np.tile(np.asarray(mu, dtype=np.uint8), (rows, 1)), t_max)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# Filled by test_acceptance.py: one "criterion N PASS/FAIL: ..." line each.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
