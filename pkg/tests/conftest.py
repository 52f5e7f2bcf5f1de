import pytest

from uncertlab.states import StateSpec, build, default_grid

# one line per acceptance criterion, echoed after the test summary so the
# pass/fail record is visible without -s
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def _small(spec: StateSpec, n: int = 4001):
    return build(spec, grid=default_grid(spec, n_points=n))


@pytest.fixture(scope="session")
def gauss_state():
    return build(StateSpec(kind="gaussian_ground"))


@pytest.fixture(scope="session")
def gauss_small():
    return _small(StateSpec(kind="gaussian_ground"))


@pytest.fixture(scope="session")
def ho1_state():
    return build(StateSpec(kind="harmonic_excited", n_level=1))


@pytest.fixture(scope="session")
def two_plus_state():
    return build(StateSpec(kind="two_gaussian", separation=4.0, relative_sign=1))


@pytest.fixture(scope="session")
def two_minus_state():
    return build(StateSpec(kind="two_gaussian", separation=4.0, relative_sign=-1))


@pytest.fixture(scope="session")
def boosted_small():
    return _small(StateSpec(kind="boosted_gaussian", p0=0.7))
