from pathlib import Path

import pytest

from polyauto.config import load_config
from polyauto.filtration import default_regions
from polyauto.orbits import census_through

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def fixture_config(name):
    return load_config(CONFIGS / f"{name}.json")


def _census(name, k_max):
    cfg = fixture_config(name)
    return census_through(cfg.map, k_max, cfg.radius, grid=cfg.census.get("grid", 200),
                          complex_seeds=cfg.census.get("complex_seeds", 0), seed=cfg.seed)


@pytest.fixture(scope="session")
def horseshoe():
    cfg = fixture_config("horseshoe")
    return cfg.map, default_regions(cfg.map, cfg.radius)


@pytest.fixture(scope="session")
def horseshoe01():
    cfg = fixture_config("horseshoe_a01")
    return cfg.map, default_regions(cfg.map, cfg.radius)


@pytest.fixture(scope="session")
def attracting():
    cfg = fixture_config("attracting")
    return cfg.map, default_regions(cfg.map, cfg.radius)


@pytest.fixture(scope="session")
def horseshoe_census():
    return _census("horseshoe", 6)


@pytest.fixture(scope="session")
def horseshoe01_census():
    return _census("horseshoe_a01", 8)


@pytest.fixture(scope="session")
def attracting_census():
    return _census("attracting", 7)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
