import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

from fractaldrum.ifs import cantor_ifs, carpet_ifs, gasket_ifs, interval_ifs  # noqa: E402

settings.register_profile("fixed", max_examples=100, derandomize=True, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("fixed")

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def cantor():
    return cantor_ifs()


@pytest.fixture(scope="session")
def interval():
    return interval_ifs()


@pytest.fixture(scope="session")
def carpet():
    return carpet_ifs()


@pytest.fixture(scope="session")
def gasket():
    return gasket_ifs()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
