import numpy as np
import pytest

from mosquito_sit import BioParams, ControlParams

_ACCEPTANCE_LINES: list[str] = []


def record_acceptance(line: str) -> None:
    print(line)
    _ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def defaults():
    return BioParams()


@pytest.fixture
def low_r():
    # beta_E = 0.1 gives R = 0.765625 < 1
    return BioParams(beta_E=0.1)


@pytest.fixture
def ctrl75():
    return ControlParams(theta=75.0, alpha=0.25)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
