"""Shared fixture builders for the test suite."""

from __future__ import annotations

import pytest

from hrepair.disturb import RepairProblem, inject
from hrepair.fixtures import Suite, fork_suite, load_suite
from hrepair.model import make_universe
from hrepair.planner import SearchBudget, solve


def plan_names(tree) -> list[str]:
    return [a.name for a in tree.plan()]


def solve_suite(suite: Suite, record_trail: bool = False):
    universe = make_universe(suite.domain, suite.problem)
    result = solve(
        suite.domain,
        suite.problem.init,
        suite.problem.tasks,
        SearchBudget(wall_secs=30),
        universe,
        record_trail=record_trail,
    )
    assert result.status == "solved", result
    return result


def fork_rp(methods=("m1", "m2", "m3"), disturbance="storm", position=1) -> RepairProblem:
    """A storm-after-drive repair problem over the chosen method subset.

    The original tree is always built from the full method set; the
    repair domain is the restricted one.
    """
    full = fork_suite(("m1", "m2", "m3"))
    tree = solve_suite(full).tree
    restricted = fork_suite(methods)
    spec = next(d for d in full.disturbances if d.name == disturbance)
    return inject(tree, restricted.domain, restricted.problem, spec, position)


@pytest.fixture
def fork_full():
    return fork_suite(("m1", "m2", "m3"))


@pytest.fixture
def gatecrash_rp() -> RepairProblem:
    suite = load_suite("gatecrash")
    tree = solve_suite(suite).tree
    return inject(tree, suite.domain, suite.problem, suite.disturbances[0], 1)


@pytest.fixture
def satellite_rp() -> RepairProblem:
    suite = load_suite("satellite")
    tree = solve_suite(suite).tree
    return inject(tree, suite.domain, suite.problem, suite.disturbances[0], 4)
