import os
import sys

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

CRITERIA = []


@pytest.fixture()
def criterion():
    """Record and print one pass/fail line per acceptance criterion, then assert it."""

    def record(label, ok, detail):
        line = f"CRITERION {label}: {'PASS' if ok else 'FAIL'} | {detail}"
        CRITERIA.append(line)
        print(line)
        assert ok, line

    return record


def _order(line):
    label = line.split()[1].rstrip(":")
    return int(label.rstrip("abc")), label


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in sorted(CRITERIA, key=_order):
            terminalreporter.write_line(line)
