"""Disturbance injection and repair-problem classification."""

from __future__ import annotations

import random

import pytest

from conftest import fork_rp, solve_suite
from hrepair.disturb import (
    CLASS_ACTION_FAILURE,
    CLASS_ANOMALY,
    CLASS_NORMAL,
    CLASS_TASK_FAILURE,
    InapplicableDisturbanceError,
    classify,
    inject,
    make_repair_problem,
)
from hrepair.fixtures import fork_suite, load_suite
from hrepair.hddl import DisturbanceSpec
from hrepair.microgen import random_micro_instance
from hrepair.model import TRUTH, Effect, EffectBranch, GroundAtom, Literal, State


def test_empty_effect_disturbance_is_class_1():
    rp = fork_rp(disturbance="calm", position=1)
    assert rp.s_c == rp.predicted
    report = classify(rp)
    assert report.classification == CLASS_NORMAL
    assert not report.anomaly and report.task_failure is None and report.action_failure is None


def test_storm_scenario_observes_an_anomalous_state():
    rp = fork_rp(("m1", "m2", "m3"), "storm", 1)
    assert rp.anomaly
    assert rp.s_c == State([GroundAtom("at-depot"), GroundAtom("courier-here")])
    assert rp.predicted == State([GroundAtom("at-depot"), GroundAtom("window-open")])
    report = classify(rp)
    assert report.classification == CLASS_ACTION_FAILURE
    assert report.task_failure is not None and report.action_failure is not None
    assert report.action_failure.action.name == "hand-over"


def test_random_placement_is_seed_deterministic():
    suite = load_suite("openstacks")
    tree = solve_suite(suite).tree
    unmake = next(d for d in suite.disturbances if d.name == "unmake")
    a = inject(tree, suite.domain, suite.problem, unmake, None, random.Random(42))
    b = inject(tree, suite.domain, suite.problem, unmake, None, random.Random(42))
    assert a.position == b.position and a.s_c == b.s_c
    positions = {
        inject(tree, suite.domain, suite.problem, unmake, None, random.Random(s)).position
        for s in range(30)
    }
    assert len(positions) > 1  # the guard admits several placements


def test_inapplicable_guard_is_reported():
    suite = fork_suite()
    tree = solve_suite(suite).tree
    spec = DisturbanceSpec("ghost", Literal("courier-here"), Effect(), "random")
    with pytest.raises(InapplicableDisturbanceError):
        inject(tree, suite.domain, suite.problem, spec, None, random.Random(0))
    with pytest.raises(InapplicableDisturbanceError):
        inject(tree, suite.domain, suite.problem, spec, 1)


def test_sc_matches_declared_construction():
    # s_c = disturbance applied to the state after a_c's own effects
    rp = fork_rp(("m1", "m2", "m3"), "storm", 1)
    from hrepair.model import apply_unchecked, effect_delta

    after = rp.s0
    for a in rp.pi_x:
        after = apply_unchecked(after, a, rp.universe)
    dels, adds = effect_delta(rp.disturbance.effect, after, rp.universe)
    assert rp.s_c == after.updated(dels, adds)
    assert rp.a_c in rp.tree.action_leaves()


def test_class_3_without_class_4():
    # kill only the staging gate: the chain breaks but every action's own
    # precondition survives
    suite = load_suite("gatecrash")
    tree = solve_suite(suite).tree
    spec = DisturbanceSpec(
        "gate-shut",
        TRUTH,
        Effect((EffectBranch(deletes=(("gate-open", ()),)),)),
        1,
    )
    rp = inject(tree, suite.domain, suite.problem, spec, 1)
    report = classify(rp)
    assert report.classification == CLASS_TASK_FAILURE
    assert report.task_failure is not None
    assert report.action_failure is None
    assert report.task_failure.node.kind == "method"
    assert report.task_failure.node.method.name == "m-stage-gate"


def test_class_4_flag_reports_the_failing_action():
    suite = load_suite("satellite")
    tree = solve_suite(suite).tree
    rp = inject(tree, suite.domain, suite.problem, suite.disturbances[0], 4)
    report = classify(rp)
    assert report.classification == CLASS_ACTION_FAILURE
    assert report.action_failure.action.name == "take-image"


def test_parent_reported_before_child_when_both_fail(gatecrash_rp):
    # jam kills both the gate (method) and the key (action); the method is
    # chronologically prior, so it is the reported failure node
    report = classify(gatecrash_rp)
    assert report.task_failure.node.kind == "method"
    assert report.task_failure.node.method.name == "m-stage-gate"
    assert report.action_failure.action.name == "use-key"


def test_class_2_only_when_nothing_downstream_breaks():
    suite = load_suite("openstacks")
    tree = solve_suite(suite).tree
    unmake = next(d for d in suite.disturbances if d.name == "unmake")
    rp = inject(tree, suite.domain, suite.problem, unmake, 3)  # after ship o1
    report = classify(rp)
    assert report.classification == CLASS_ANOMALY
    assert report.anomaly and report.task_failure is None


def test_action_failure_implies_task_failure_on_random_instances():
    checked = 0
    seed = 0
    while checked < 120:
        inst = random_micro_instance(seed)
        seed += 1
        if inst is None:
            continue
        report = classify(inst.rp)
        if report.action_failure is not None:
            assert report.task_failure is not None
        checked += 1


def test_degenerate_empty_prefix_repair_problem():
    suite = fork_suite()
    tree = solve_suite(suite).tree
    rp = make_repair_problem(suite.domain, suite.problem, tree, 0, suite.problem.init)
    assert rp.a_c is None
    assert rp.pi_x == ()
    assert rp.pi_u == tree.plan()
    assert classify(rp).classification == CLASS_NORMAL
