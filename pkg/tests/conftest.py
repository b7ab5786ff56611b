"""Shared pytest wiring: prints one line per acceptance criterion in the
terminal summary."""

from criteria import CRITERION_LINES


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not CRITERION_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(CRITERION_LINES):
        terminalreporter.write_line(line)
