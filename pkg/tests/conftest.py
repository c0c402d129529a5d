from __future__ import annotations

import os

import pytest

from focalfield.cache import GridCache
from focalfield.config import default_config
from focalfield.core import OpticalConfig
from focalfield.sweeps import get_grid
from focalfield.thermal import TrapConfig


@pytest.fixture(scope="session")
def cfg029():
    return OpticalConfig.from_focusing(0.29)


@pytest.fixture(scope="session")
def trap():
    return TrapConfig.from_kHz(56.0, 7.0, 4.0, 0.25)


@pytest.fixture(scope="session")
def grid_cache(tmp_path_factory):
    """Grid cache shared by the session; reuses ``$FOCALFIELD_CACHE`` when set."""
    directory = os.environ.get("FOCALFIELD_CACHE") or tmp_path_factory.mktemp("grids")
    return GridCache(directory)


@pytest.fixture(scope="session")
def default_run():
    return default_config()


@pytest.fixture(scope="session")
def grid029(default_run, grid_cache):
    """Validated u = 0.29 grid covering 4 sigma at 400 uK for the whole trap band."""
    return get_grid(default_run, grid_cache)


CRITERIA_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if CRITERIA_LINES:
        terminalreporter.section("acceptance criteria")
        for line in CRITERIA_LINES:
            terminalreporter.write_line(line)


def pytest_collection_modifyitems(items):
    # anything that needs the validated u = 0.29 grid takes minutes on a cold cache
    for item in items:
        if "grid029" in getattr(item, "fixturenames", ()):
            item.add_marker(pytest.mark.slow)
