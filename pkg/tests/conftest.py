"""Shared test plumbing: collects acceptance summary lines."""

import pytest

_ACCEPTANCE_LINES = []


@pytest.fixture
def report_line():
    """Record a one-line verdict, echoed in the terminal summary."""

    def _record(line: str) -> None:
        print(line)
        _ACCEPTANCE_LINES.append(line)

    return _record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.line(line)
