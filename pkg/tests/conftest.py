import numpy as np
import pytest

from tdainsar.geometry import RadarGeometry

ACCEPTANCE_LINES = []


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: longer-running statistical or end-to-end check")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
        terminalreporter.write_line(line)


@pytest.fixture
def geom():
    return RadarGeometry.default()


@pytest.fixture
def wide_geom():
    # wide swath and slow azimuth sampling so orbit columns are separable from heights
    return RadarGeometry.default(range_spacing=1500.0, azimuth_time_step=0.05)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
