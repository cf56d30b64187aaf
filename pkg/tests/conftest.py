"""Shared pytest configuration.

Acceptance tests attach a one-line verdict to their report through the
``verdict`` fixture; the lines are printed together at the end of the run.
"""

import pytest


@pytest.fixture
def verdict(record_property):
    def record(number, ok, detail):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}"
        print(line)
        record_property("criterion", line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    lines = []
    for key in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(key, []):
            lines.extend(v for k, v in getattr(report, "user_properties", []) if k == "criterion")
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
