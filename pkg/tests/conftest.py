import re

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("stosym", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("stosym")

_LINES = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_LINES] = []


@pytest.fixture
def record_criterion(request):
    """Collect one summary line per acceptance criterion."""
    lines = request.config.stash[_LINES]

    def record(label: str, passed: bool, detail: str):
        line = f"{label} {'PASS' if passed else 'FAIL'}  {detail}"
        print(line)
        lines.append(line)

    return record


def _order(line):
    m = re.match(r"A(\d+)(\S*)", line)
    return (int(m.group(1)), m.group(2)) if m else (10**6, line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=_order):
            terminalreporter.write_line(line)
