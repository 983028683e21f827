import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from oracles import inclusive_range  # noqa: E402

from rbpb.discretization import ParameterPoint, build_problem  # noqa: E402
from rbpb.rb import greedy_build  # noqa: E402

# training / test grids in (sqrt(D), V), V varying fastest
TRAIN_GRID = [(s, v) for s in inclusive_range(0.08, 0.02, 0.4) for v in inclusive_range(0.0, 0.25, 5.0)]
TEST_GRID = [(s, v) for s in inclusive_range(0.085, 0.01, 0.395) for v in inclusive_range(0.4, 0.5, 4.4)]


def as_points(grid):
    return [ParameterPoint.from_sqrt(s, v) for s, v in grid]


@pytest.fixture(scope="session")
def train_grid():
    return as_points(TRAIN_GRID)


@pytest.fixture(scope="session")
def test_grid():
    return as_points(TEST_GRID)


@pytest.fixture(scope="session")
def problem_1d():
    return build_problem(1, 2000)


@pytest.fixture(scope="session")
def greedy_1d(problem_1d, train_grid):
    """Default-grid 1D greedy to N = 16 at N_x = 2000: ``(space, rounds)``."""
    return greedy_build(problem_1d, train_grid, 16)


# ---------------------------------------------------------------- acceptance report

ACCEPTANCE_LINES = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        status = "PASS" if rep.passed else "FAIL"
        detail = "; ".join(f"{k}={v}" for k, v in item.user_properties)
        line = f"[{status}] criterion {marker.args[0]}: {marker.args[1]}"
        ACCEPTANCE_LINES.append(line + (f"  ({detail})" if detail else ""))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
