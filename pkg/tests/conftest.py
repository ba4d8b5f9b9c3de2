import numpy as np
import pytest

from hybridnoma.grouping import group_users
from hybridnoma.scenario import ChannelRealization, Scenario, SystemParams, make_scenario

_ACCEPTANCE: list[tuple[str, bool, str]] = []


def small_params(K: int = 2, **kw) -> SystemParams:
    return SystemParams(num_users=K, num_clusters=K // 2, **kw)


def custom_scenario(gains, params: SystemParams | None = None) -> Scenario:
    gains = [float(g) for g in gains]
    params = params or small_params(len(gains))
    return Scenario(params, ChannelRealization(tuple(gains), (1.0,) * len(gains)))


@pytest.fixture
def default_case():
    sc = make_scenario(seed=0)
    return sc, group_users(sc.channels)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def acceptance_log():
    return _ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
