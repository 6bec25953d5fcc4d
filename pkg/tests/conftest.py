import numpy as np
import pytest

from eslpower.channel import synthesize_channel
from eslpower.harvester import HarvesterModel
from eslpower.scenario import build_default_scenario


@pytest.fixture(scope="session")
def scenario():
    return build_default_scenario()


@pytest.fixture(scope="session")
def channel(scenario):
    return synthesize_channel(scenario.antennas, scenario.devices, scenario.params, seed=0)


@pytest.fixture(scope="session")
def harvester():
    return HarvesterModel()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import RESULTS

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(RESULTS):
        ok, detail = RESULTS[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
