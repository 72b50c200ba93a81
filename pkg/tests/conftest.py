"""Shared fixtures: a registry that prints one line per acceptance criterion.

Each acceptance test reports through the ``criterion_report`` fixture, which
records a PASS/FAIL line and asserts the verdict. The collected lines are
echoed as a dedicated section at the end of the terminal summary so the
acceptance sweep is readable at a glance even inside a long pytest run.
"""

import pytest

acceptance_lines: list[str] = []


@pytest.fixture
def criterion_report():
    """Returns report(number, title, passed, detail) -> None.

    Appends a formatted verdict line to the module-level registry and then
    asserts ``passed`` so the test fails with the same line it printed.
    """

    def report(number: int, title: str, passed: bool, detail: str) -> None:
        verdict = "PASS" if passed else "FAIL"
        line = f"criterion {number:>2} {verdict}  {title}: {detail}"
        acceptance_lines.append(line)
        assert passed, line

    return report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not acceptance_lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(acceptance_lines):
        terminalreporter.write_line(line)
