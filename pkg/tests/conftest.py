import pytest
from hypothesis import HealthCheck, settings

from buildstock.io import load_demand, load_policy_table

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture(scope="session")
def shipped_demand():
    return load_demand()


@pytest.fixture(scope="session")
def shipped_params():
    return load_policy_table()


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
