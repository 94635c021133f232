"""State, formula, effect, and transition semantics."""

from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hrepair.errors import DomainValidationError, PreconditionError
from hrepair.model import (
    DUMMY_ACTION,
    TRUTH,
    ActionSchema,
    And,
    Effect,
    EffectBranch,
    GroundAction,
    GroundAtom,
    Literal,
    Quantified,
    State,
    Universe,
    apply_action,
    apply_plan,
    eval_formula,
    first_falsified,
    ground_action,
)


def universe(objects=None, predicates=None, types=None):
    return Universe(types or {}, objects or {}, predicates)


def test_truth_holds_in_empty_state():
    assert eval_formula(TRUTH, State(), universe())


def test_negated_literal():
    u = universe({"c": "object"}, {"p": ("object",)})
    s = State([GroundAtom("p", ("c",))])
    assert not eval_formula(Literal("p", ("c",), positive=False), s, u)
    assert eval_formula(Literal("p", ("c",)), s, u)


def test_forall_enumerates_universe():
    u = universe({"w1": "loc", "w2": "loc"}, {"visible": ("loc",)}, {"loc": None})
    s = State([GroundAtom("visible", ("w1",)), GroundAtom("visible", ("w2",))])
    f = Quantified("forall", "?x", "loc", Literal("visible", ("?x",)))
    assert eval_formula(f, s, u)
    s2 = State([GroundAtom("visible", ("w1",))])
    assert not eval_formula(f, s2, u)
    assert eval_formula(Quantified("exists", "?x", "loc", Literal("visible", ("?x",))), s2, u)


def test_unknown_predicate_rejected():
    u = universe({}, {"p": ()})
    with pytest.raises(DomainValidationError):
        eval_formula(Literal("q", ()), State(), u)


def test_state_canonical_order_is_stable():
    a = State([GroundAtom("b"), GroundAtom("a"), GroundAtom("c", ("x",))])
    b = State([GroundAtom("c", ("x",)), GroundAtom("a"), GroundAtom("b")])
    assert a == b
    assert a.canonical() == b.canonical()
    assert [str(x) for x in a.canonical()] == ["(a)", "(b)", "(c x)"]


def move_action():
    return GroundAction(
        "move",
        ("r", "w1", "w2"),
        Literal("at", ("r", "w1")),
        Effect((EffectBranch(adds=(("at", ("r", "w2")),), deletes=(("at", ("r", "w1")),)),)),
    )


def move_universe():
    return universe({"r": "object", "w1": "object", "w2": "object"}, {"at": ("object", "object")})


def test_apply_dummy_is_identity():
    s = State([GroundAtom("p")])
    assert apply_action(s, DUMMY_ACTION, universe({}, {"p": ()})) == s


def test_apply_moves_atom():
    u = move_universe()
    s = State([GroundAtom("at", ("r", "w1"))])
    out = apply_action(s, move_action(), u)
    assert out == State([GroundAtom("at", ("r", "w2"))])


def test_apply_inapplicable_names_falsified_literal():
    u = move_universe()
    with pytest.raises(PreconditionError) as err:
        apply_action(State(), move_action(), u)
    assert "at" in str(err.value)


def test_when_effect_with_false_condition_is_vacuous():
    u = universe({}, {"p": (), "q": (), "r": ()})
    act = GroundAction(
        "a",
        (),
        TRUTH,
        Effect(
            (
                EffectBranch(adds=(("q", ()),), condition=Literal("p", ())),
                EffectBranch(adds=(("r", ()),)),
            )
        ),
    )
    out = apply_action(State(), act, u)
    assert GroundAtom("r") in out and GroundAtom("q") not in out


def test_effect_branches_see_the_pre_transition_state():
    # the second branch's condition must not observe the first branch's add
    u = universe({}, {"p": (), "q": ()})
    act = GroundAction(
        "a",
        (),
        TRUTH,
        Effect(
            (
                EffectBranch(adds=(("p", ()),)),
                EffectBranch(adds=(("q", ()),), condition=Literal("p", ())),
            )
        ),
    )
    out = apply_action(State(), act, u)
    assert GroundAtom("p") in out and GroundAtom("q") not in out


def test_deletes_apply_before_adds_add_wins():
    u = universe({}, {"p": ()})
    act = GroundAction(
        "a", (), TRUTH, Effect((EffectBranch(adds=(("p", ()),), deletes=(("p", ()),)),))
    )
    out = apply_action(State([GroundAtom("p")]), act, u)
    assert GroundAtom("p") in out


def test_apply_plan_empty_is_identity():
    s = State([GroundAtom("p")])
    end, failure = apply_plan(s, (), universe({}, {"p": ()}))
    assert end == s and failure is None


def test_apply_plan_reports_first_failure_index():
    u = universe({}, {"p": (), "q": ()})
    a1 = GroundAction("a1", (), Literal("p", ()), Effect((EffectBranch(deletes=(("q", ()),)),)))
    a2 = GroundAction("a2", (), Literal("q", ()), Effect())
    s = State([GroundAtom("p"), GroundAtom("q")])
    _, failure = apply_plan(s, (a1, a2), u)
    assert failure is not None
    assert failure.index == 1  # the second action
    assert failure.action is a2


def test_ground_action_substitutes_schema_parameters():
    schema = ActionSchema(
        "go",
        (("?a", "object"), ("?b", "object")),
        Literal("at", ("?a",)),
        Effect((EffectBranch(adds=(("at", ("?b",)),), deletes=(("at", ("?a",)),)),)),
    )
    ga = ground_action(schema, ("x", "y"))
    assert ga.precondition == Literal("at", ("x",))
    assert ga.effect.branches[0].adds == (("at", ("y",)),)


def test_first_falsified_descends_conjunctions():
    u = universe({}, {"p": (), "q": ()})
    f = And((Literal("p", ()), Literal("q", ())))
    assert first_falsified(f, State([GroundAtom("p")]), u) == "(q)"


atoms_st = st.sets(st.sampled_from([GroundAtom(p) for p in "pqrst"]), max_size=5)


@settings(max_examples=100, deadline=None)
@given(atoms_st, atoms_st, atoms_st)
def test_gamma_is_deterministic_and_pure(state_atoms, adds, deletes):
    u = universe({}, {p: () for p in "pqrst"})
    act = GroundAction(
        "a",
        (),
        TRUTH,
        Effect(
            (
                EffectBranch(
                    adds=tuple((a.predicate, ()) for a in adds),
                    deletes=tuple((d.predicate, ()) for d in deletes),
                ),
            )
        ),
    )
    s = State(state_atoms)
    out1 = apply_action(s, act, u)
    out2 = apply_action(s, act, u)
    assert out1 == out2
    assert out1.canonical() == out2.canonical()
    assert s == State(state_atoms)  # input untouched
