"""Canonical JSON serialization: byte-stable round trips, pointer errors."""

from __future__ import annotations

from pathlib import Path

import pytest

from conftest import solve_suite
from hrepair.errors import SchemaError
from hrepair.fixtures import fork_suite, load_suite
from hrepair.jsonio import (
    plan_from_json,
    plan_to_json,
    state_from_obj,
    state_to_obj,
    tree_from_json,
    tree_to_json,
)
from hrepair.microgen import random_micro_instance
from hrepair.model import DUMMY_ACTION, State, GroundAtom
from hrepair.tree import DecompositionTree, action_node, make_root

GOLDEN = Path(__file__).parent / "golden" / "fork_upper.tree.json"


def test_single_dummy_tree_round_trip():
    suite = fork_suite()
    tree = DecompositionTree(make_root([action_node(DUMMY_ACTION)]))
    text = tree_to_json(tree)
    again = tree_from_json(text, suite.domain)
    assert tree_to_json(again) == text
    assert again.plan()[0].is_dummy()


def test_fork_upper_tree_matches_golden_file():
    suite = fork_suite()
    tree = solve_suite(suite).tree
    text = tree_to_json(tree)
    assert text == GOLDEN.read_text()
    again = tree_from_json(text, suite.domain)
    assert tree_to_json(again) == text


def test_serialization_is_byte_stable():
    suite = fork_suite()
    a = tree_to_json(solve_suite(suite).tree)
    b = tree_to_json(solve_suite(fork_suite()).tree)
    assert a == b


def test_random_tree_fuzz_round_trip():
    hits = 0
    for seed in range(120):
        inst = random_micro_instance(seed)
        if inst is None:
            continue
        text = tree_to_json(inst.rp.tree)
        again = tree_from_json(text, inst.domain)
        assert tree_to_json(again) == text
        assert again.canonical_key() == inst.rp.tree.canonical_key()
        hits += 1
    assert hits >= 10


def test_state_round_trip():
    s = State([GroundAtom("at", ("r", "w1")), GroundAtom("p")])
    assert state_from_obj(state_to_obj(s)) == s


def test_plan_round_trip():
    suite = load_suite("satellite")
    tree = solve_suite(suite).tree
    text = plan_to_json(tree.plan())
    again = plan_from_json(text, suite.domain)
    assert [a.name for a in again] == [a.name for a in tree.plan()]
    assert plan_to_json(again) == text


def test_schema_violation_reports_json_pointer():
    suite = fork_suite()
    with pytest.raises(SchemaError) as err:
        tree_from_json('{"format":"htn-tree","version":1,"root":{"kind":"nope"}}', suite.domain)
    assert err.value.pointer == "/root/kind"
    with pytest.raises(SchemaError) as err:
        tree_from_json(
            '{"format":"htn-tree","version":1,"root":{"kind":"root","children":[{"kind":"action"}]}}',
            suite.domain,
        )
    assert err.value.pointer.startswith("/root/children/0")
    with pytest.raises(SchemaError) as err:
        tree_from_json('{"format":"wrong"}', suite.domain)
    assert err.value.pointer == "/format"
    with pytest.raises(SchemaError):
        tree_from_json("{not json", suite.domain)
