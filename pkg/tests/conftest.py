from pathlib import Path

import pytest

from sasnet.problems import build_problems
from sasnet.scenario import ScenarioConfig, generate_scenario, load_config

ROOT = Path(__file__).resolve().parents[1]
DESK = ROOT / "configs" / "desk.yaml"
TINY = ROOT / "configs" / "tiny.yaml"


@pytest.fixture(scope="session")
def desk_cfg() -> ScenarioConfig:
    return load_config(DESK)


@pytest.fixture(scope="session")
def tiny_cfg() -> ScenarioConfig:
    return load_config(TINY)


@pytest.fixture(scope="session")
def desk(desk_cfg):
    return generate_scenario(desk_cfg, 1)


@pytest.fixture(scope="session")
def desk_problems(desk):
    return build_problems(desk)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    # lets fixtures see the call outcome during teardown
    outcome = yield
    if call.when == "call":
        item.rep_call = outcome.get_result()
