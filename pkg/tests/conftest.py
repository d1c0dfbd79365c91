"""Shared fixtures: an acceptance log that reprints one verdict line per
criterion at the end of the run, after the usual test listing."""

import pytest

_ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def acceptance_log():
    """Append ``(label, verdict, detail)`` tuples; they are echoed both
    immediately and in the terminal summary."""
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_LINES:
        return
    terminalreporter.write_line("")
    terminalreporter.write_line("acceptance summary")
    terminalreporter.write_line("-" * 72)
    for label, verdict, detail in _ACCEPTANCE_LINES:
        terminalreporter.write_line(f"{verdict:4s} {label}: {detail}")
