import numpy as np
import pytest

from fdrl_slice.env import EnvConfig, MvnoScenario, User, UserType


@pytest.fixture
def cfg():
    return EnvConfig()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def make_user(i, kind, pos=(300.0, 250.0), cfg=EnvConfig()):
    return User(i, kind, pos, cfg.tx_power, cfg.packet_size(kind))


@pytest.fixture
def scenario5():
    return MvnoScenario(1, 5, 0.5, 1e6)


EMBB = UserType.EMBB
URLLC = UserType.URLLC


# one summary line per acceptance criterion, printed after the run
CRITERIA: dict[int, str] = {}


def record_criterion(number: int, title: str, passed: bool, detail: str) -> None:
    line = f"criterion {number} [{'PASS' if passed else 'FAIL'}] {title}: {detail}"
    CRITERIA[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for n in sorted(CRITERIA):
            terminalreporter.write_line(CRITERIA[n])
