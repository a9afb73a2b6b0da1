import numpy as np
import pytest

from dronewatch.cli import resolve_scenario
from dronewatch.env import OversightEnv

# One line per acceptance criterion, echoed in the terminal summary.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def default_script():
    return resolve_scenario("default")


@pytest.fixture(scope="session")
def static_script():
    return resolve_scenario("static")


@pytest.fixture(scope="session")
def rotor_script():
    return resolve_scenario("rotor_failure")


@pytest.fixture
def make_env(default_script):
    def factory(script=None, **kwargs):
        return OversightEnv(script if script is not None else default_script, **kwargs)

    return factory


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
