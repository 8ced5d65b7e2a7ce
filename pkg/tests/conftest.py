from pathlib import Path

import pytest

import report


@pytest.fixture
def root():
    return Path(__file__).resolve().parents[1]


def pytest_terminal_summary(terminalreporter):
    if not report.LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(report.LINES):
        terminalreporter.write_line(report.LINES[n])
