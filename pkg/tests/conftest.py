import pytest

from kgladder.model import ModelParams, coupling_from
from kgladder.spectrum import MatchingProblem, find_ladder

# lines recorded by test_acceptance.py, echoed in the terminal summary
ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def coupling():
    return coupling_from(ModelParams(gamma=2.0, ell=0))


@pytest.fixture(scope="session")
def problem(coupling):
    return MatchingProblem(coupling, r0=1.0)


@pytest.fixture(scope="session")
def ladder(problem):
    return find_ladder(problem, 6)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
