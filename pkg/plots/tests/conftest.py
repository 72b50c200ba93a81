"""Shared fixtures: the per-criterion verdict line for this package."""

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
    terminalreporter.section("acceptance criteria (plots)")
    for line in sorted(acceptance_lines):
        terminalreporter.write_line(line)
