"""Shared fixtures and the acceptance-summary hook.

Acceptance tests register one line per criterion through the
``criterion_report`` fixture; the lines are printed in the terminal
summary so they survive output capture.
"""

import pytest

_CRITERION_LINES: dict[int, str] = {}


@pytest.fixture
def criterion_report():
    def record(number: int, ok: bool, detail: str) -> None:
        verdict = "PASS" if ok else "FAIL"
        _CRITERION_LINES[number] = f"criterion {number:2d}: {verdict} - {detail}"
        print(_CRITERION_LINES[number])

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _CRITERION_LINES:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for number in sorted(_CRITERION_LINES):
        terminalreporter.write_line(_CRITERION_LINES[number])
