"""Shared test helpers and the acceptance-criteria reporter."""

import numpy as np
import pytest

CRITERIA = {}


def record_criterion(num, description, passed, detail=""):
    CRITERIA[num] = (description, bool(passed), detail)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(CRITERIA):
        description, passed, detail = CRITERIA[num]
        status = "PASS" if passed else "FAIL"
        line = f"criterion {num:02d} {status}: {description}"
        if detail:
            line += f" ({detail})"
        terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20260824)
