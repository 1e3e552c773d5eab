import os
import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from masonry_sched.model import ScheduleProblem
from masonry_sched.wallplan import BrickSpec, WallSpec, build_plan, compute_conflicts

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"
GOLDEN = Path(__file__).resolve().parent / "golden"

BRICK = BrickSpec(0.5, 0.1, 0.1)
PICKUPS = ((1.5, -1.0), (-1.5, -1.0))


def wall(length, height):
    return build_plan(WallSpec(length, height, 0.2), BRICK)


def mission_problem(**kw):
    return ScheduleProblem(2, PICKUPS, **kw)


@pytest.fixture(scope="session")
def full_plan():
    return wall(2.5, 0.3)


@pytest.fixture(scope="session")
def full_conflicts(full_plan):
    return compute_conflicts(full_plan, 0.8)


@pytest.fixture(scope="session")
def five_plan():
    return wall(1.0, 0.2)


# one line per acceptance criterion, printed after the test summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
