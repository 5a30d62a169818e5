import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from lpe_channel import ChannelConfig, ChannelGrid, Discretization

settings.register_profile("default", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def cfg():
    return ChannelConfig(f=0.5)


@pytest.fixture
def grid(cfg):
    return ChannelGrid(cfg, Discretization(Nx=16, Ny=33, M=4))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
