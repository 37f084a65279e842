"""Collects the acceptance verdict lines and prints them after the run."""

import pytest

ACCEPTANCE_LINES = []


@pytest.fixture
def verdict(capsys):
    """``verdict(k, title, ok, detail)`` records and echoes one acceptance line."""

    def record(k, title, ok, detail=""):
        line = f"ACCEPTANCE {k:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
        ACCEPTANCE_LINES.append((k, line))
        with capsys.disabled():
            print("\n" + line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
