"""Shared fixtures: session-scoped frames and the acceptance line reporter."""

import pytest

from needlets.frame import build_frame

# Acceptance tests append one "... PASS/FAIL ..." line each; the terminal
# summary hook replays them after the run so they stay visible regardless
# of the capture mode.
ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def frame6():
    return build_frame(3, 6)


@pytest.fixture(scope="session")
def frame7():
    return build_frame(3, 7)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance summary")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
