import sys

import pytest

from nanobound import scenarios as S
from nanobound.config import Params


@pytest.fixture(scope="session")
def params():
    return Params()


@pytest.fixture(scope="session")
def hybrid(params):
    return S.solve_scenario("hybrid", params)


@pytest.fixture(scope="session")
def adsorbed(params):
    return S.solve_scenario("adsorbed", params)


@pytest.fixture(scope="session")
def adsorbed_deep(params):
    return S.solve_scenario("adsorbed", params, window=S.DEEP_WINDOW)


@pytest.fixture(scope="session")
def trap(params):
    return S.solve_scenario("trap", params)


@pytest.fixture(scope="session")
def reference(params):
    return S.reference_line(params)



def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
