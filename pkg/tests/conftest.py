import pytest

from twisted_eisenstein.config import RunConfig
from twisted_eisenstein.periods import PeriodCocycle

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def config():
    return RunConfig()


@pytest.fixture(scope="session")
def form11(config):
    return config.form()


@pytest.fixture(scope="session")
def cocycle11(form11, config):
    return PeriodCocycle(form11, config.tolerance)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
