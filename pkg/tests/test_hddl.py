"""HDDL-subset reader/writer: errors carry spans, round-trips are exact."""

from __future__ import annotations

import string

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hrepair.errors import ParseError
from hrepair.fixtures import data_text, load_suite
from hrepair.hddl import (
    format_disturbances,
    format_domain,
    format_problem,
    parse_disturbances,
    parse_domain,
    parse_problem,
)

STEMS = ("fork", "gatecrash", "satellite", "rovers", "openstacks")


def test_round_trip_all_bundled_domains():
    for stem in STEMS:
        suite = load_suite(stem)
        text = format_domain(suite.domain)
        again = parse_domain(text, f"{stem}-printed")
        assert format_domain(again) == text
        assert [m.name for m in again.methods] == [m.name for m in suite.domain.methods]
        assert again.predicates == suite.domain.predicates
        assert again.actions.keys() == suite.domain.actions.keys()


def test_round_trip_all_bundled_problems():
    for stem in STEMS:
        suite = load_suite(stem)
        text = format_problem(suite.problem)
        again = parse_problem(text, suite.domain, f"{stem}-printed")
        assert format_problem(again) == text
        assert again.init == suite.problem.init
        assert again.tasks == suite.problem.tasks


def test_round_trip_all_bundled_disturbances():
    for stem in STEMS:
        suite = load_suite(stem)
        text = format_disturbances("x", suite.domain.name, suite.disturbances)
        again = parse_disturbances(text, suite.domain, f"{stem}-printed")
        assert again == suite.disturbances


def test_unordered_subtasks_rejected():
    text = data_text("fork.hddl").replace(":ordered-subtasks (and (drive-out) (handoff))",
                                          ":subtasks (and (drive-out) (handoff))")
    with pytest.raises(ParseError) as err:
        parse_domain(text)
    assert err.value.kind == "unsupported-construct"
    assert err.value.span.line > 1


def test_goal_sections_rejected():
    suite = load_suite("fork")
    text = data_text("fork.problem.hddl").replace("(:init", "(:goal (delivered))\n  (:init")
    with pytest.raises(ParseError) as err:
        parse_problem(text, suite.domain)
    assert err.value.kind == "unsupported-construct"


def test_disjunction_rejected():
    text = data_text("fork.hddl").replace("(:precondition (fueled))", "").replace(
        ":precondition (fueled)", ":precondition (or (fueled) (at-depot))"
    )
    with pytest.raises(ParseError) as err:
        parse_domain(text)
    assert err.value.kind == "unsupported-construct"


def test_unknown_requirement_rejected():
    text = data_text("fork.hddl").replace(":negative-preconditions", ":durative-actions")
    with pytest.raises(ParseError) as err:
        parse_domain(text)
    assert err.value.kind == "unsupported-construct"


def test_reserved_dummy_action_name_rejected():
    text = data_text("fork.hddl").replace("(:action drive-out", "(:action %dummy")
    with pytest.raises(ParseError):
        parse_domain(text)


def test_undeclared_predicate_has_span_and_kind():
    text = data_text("fork.hddl").replace(":precondition (fueled)", ":precondition (charged)")
    with pytest.raises(ParseError) as err:
        parse_domain(text)
    assert err.value.kind == "undeclared-symbol"
    assert err.value.span.line > 1 and err.value.span.column > 0


def test_arity_error():
    suite = load_suite("rovers")
    bad = data_text("rovers.problem.hddl").replace("(at w1)", "(at w1 w2)")
    with pytest.raises(ParseError) as err:
        parse_problem(bad, suite.domain)
    assert err.value.kind == "arity"


def test_unknown_object_in_init():
    suite = load_suite("rovers")
    bad = data_text("rovers.problem.hddl").replace("(at w1)", "(at w9)")
    with pytest.raises(ParseError) as err:
        parse_problem(bad, suite.domain)
    assert err.value.kind == "undeclared-symbol"


def test_unknown_task_in_htn():
    suite = load_suite("fork")
    bad = data_text("fork.problem.hddl").replace("(deliver)", "(teleport)")
    with pytest.raises(ParseError) as err:
        parse_problem(bad, suite.domain)
    assert err.value.kind == "undeclared-symbol"


def test_empty_task_list_allowed():
    suite = load_suite("fork")
    text = data_text("fork.problem.hddl").replace(":ordered-subtasks (deliver)", ":ordered-subtasks ()")
    problem = parse_problem(text, suite.domain)
    assert problem.tasks == ()


def test_guard_only_disturbance_is_legal():
    suite = load_suite("fork")
    calm = next(d for d in suite.disturbances if d.name == "calm")
    assert calm.effect.is_empty()
    assert calm.placement == "random"


def test_disturbance_with_undeclared_predicate_rejected():
    suite = load_suite("fork")
    bad = data_text("fork.dist.hddl").replace("(at-depot)", "(hailstorm)")
    with pytest.raises(ParseError) as err:
        parse_disturbances(bad, suite.domain)
    assert err.value.kind == "undeclared-symbol"


def test_method_with_empty_subtasks_parses():
    suite = load_suite("rovers")
    here = next(m for m in suite.domain.methods if m.name == "m-goto-here")
    assert here.subtasks == ()


def test_unbalanced_parens_is_a_lexical_error():
    with pytest.raises(ParseError) as err:
        parse_domain("(define (domain x)")
    assert err.value.kind == "lexical"


@settings(max_examples=200, deadline=None)
@given(st.text(alphabet=string.printable, max_size=200))
def test_parser_never_crashes_on_garbage(text):
    # malformed input must raise ParseError, never anything else
    try:
        parse_domain(text)
    except ParseError:
        pass


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31), st.sampled_from(STEMS))
def test_mutated_domains_error_cleanly_or_parse(seed, stem):
    import random as _random

    rng = _random.Random(seed)
    text = list(data_text(f"{stem}.hddl"))
    for _ in range(rng.randint(1, 4)):
        i = rng.randrange(len(text))
        text[i] = rng.choice("() abcdefgh?:-\n")
    try:
        parse_domain("".join(text))
    except ParseError:
        pass
