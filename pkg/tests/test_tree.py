"""Decomposition-tree operations: pre*, applicability, split, replace."""

from __future__ import annotations

import pytest

from conftest import fork_rp, plan_names, solve_suite
from hrepair.errors import StructuralError
from hrepair.fixtures import fork_suite, load_suite
from hrepair.model import (
    DUMMY_ACTION,
    TRUTH,
    And,
    GroundAtom,
    GroundTask,
    Literal,
    State,
    eval_formula,
    make_universe,
)
from hrepair.planner import SearchBudget, solve
from hrepair.tree import (
    FULLY_EXECUTED,
    PARTIALLY_EXECUTED,
    UNEXECUTED,
    DecompositionTree,
    TreeNode,
    action_node,
    changed_node_count,
    exec_status,
    find_tree_failure,
    make_root,
    plan_of,
    pre_star,
    replace,
    split,
    tree_applicable,
)


def fork_tree():
    return solve_suite(fork_suite(("m1", "m2", "m3"))).tree


def fork_universe():
    suite = fork_suite(("m1", "m2", "m3"))
    return make_universe(suite.domain, suite.problem)


def node_by_action(tree, name):
    return next(n for n in tree.action_leaves() if n.action.name == name)


def node_by_task(tree, name):
    return next(n for n in tree.task_nodes() if n.task.name == name)


# -- pre* -------------------------------------------------------------------


def test_pre_star_of_non_first_action_is_its_own_precondition():
    tree = fork_tree()
    handoff = node_by_task(tree, "handoff")
    # handoff is the second child of m1, so nothing chains into it
    assert pre_star(tree, handoff) == TRUTH
    hand_over = node_by_action(tree, "hand-over")
    # hand-over heads m0, whose precondition is empty, and the chain
    # stops at the non-first handoff task
    assert pre_star(tree, hand_over) == hand_over.action.precondition


def test_pre_star_chains_through_first_children():
    suite = load_suite("gatecrash")
    tree = solve_suite(suite).tree
    use_key = node_by_action(tree, "use-key")
    f = pre_star(tree, use_key)
    # use-key <- m-inner-key <- inner (first child) <- m-stage-gate(gate-open)
    assert isinstance(f, And)
    rendered = str(f)
    assert "gate-open" in rendered and "key-ok" in rendered


def test_pre_star_of_root_sequence_children_is_truth():
    tree = fork_tree()
    deliver = node_by_task(tree, "deliver")
    assert pre_star(tree, deliver) == TRUTH


def test_pre_star_of_detached_node_is_an_error():
    tree = fork_tree()
    with pytest.raises(StructuralError):
        pre_star(tree, action_node(DUMMY_ACTION))


def test_pre_star_entails_own_precondition_on_bundled_trees():
    # eval(pre*(a), s) implies eval(pre(a), s): the conjunction only extends
    for stem in ("gatecrash", "satellite", "rovers", "openstacks"):
        suite = load_suite(stem)
        tree = solve_suite(suite).tree
        universe = make_universe(suite.domain, suite.problem)
        state = suite.problem.init
        for leaf in tree.action_leaves():
            if eval_formula(pre_star(tree, leaf), state, universe):
                assert eval_formula(leaf.action.precondition, state, universe)


# -- applicability ----------------------------------------------------------


def test_single_dummy_tree_is_applicable_anywhere():
    root = make_root([action_node(DUMMY_ACTION)])
    tree = DecompositionTree(root)
    u = fork_universe()
    assert tree_applicable(tree, State(), u)
    assert tree_applicable(tree, State([GroundAtom("fueled")]), u)


def storm_states():
    s0 = State([GroundAtom("fueled"), GroundAtom("window-open")])
    s_c = State([GroundAtom("at-depot"), GroundAtom("courier-here")])
    return s0, s_c


def test_rederived_tree_applicable_at_start_not_at_observed():
    # the drop-box re-derivation works from the initial state but not
    # from the storm-observed state (the drive cannot be re-run)
    rp = fork_rp(("m1", "m2"))
    from hrepair.rewrite import compile_repair, decode, repair_rw

    out = repair_rw(rp)
    assert out.succeeded
    suite = fork_suite(("m1", "m2"))
    u = make_universe(suite.domain, suite.problem)
    full = solve(
        suite.domain,
        suite.problem.init,
        suite.problem.tasks,
        SearchBudget(),
        u,
        script=(("m2", ()),),
    ).tree
    assert plan_names(full) == ["drive-out", "drop-box"]
    s0, s_c = storm_states()
    assert tree_applicable(full, s0, u)
    assert not tree_applicable(full, s_c, u)


def test_courier_tree_applicable_at_observed_not_at_start():
    # the courier tree abandons the executed drive entirely, so it only
    # exists as a replacement; it cannot be derived from the start state
    tree = fork_tree()
    full = replace(tree, node_by_task(tree, "deliver"), m3_subtree())
    assert plan_names(full) == ["courier-pickup"]
    suite = fork_suite(("m1", "m3"))
    u = make_universe(suite.domain, suite.problem)
    s0, s_c = storm_states()
    assert tree_applicable(full, s_c, u)
    assert not tree_applicable(full, s0, u)


def test_tree_applicability_implies_plan_applicability():
    from hrepair.model import apply_plan

    for stem in ("gatecrash", "satellite", "rovers"):
        suite = load_suite(stem)
        tree = solve_suite(suite).tree
        u = make_universe(suite.domain, suite.problem)
        assert tree_applicable(tree, suite.problem.init, u)
        _, failure = apply_plan(suite.problem.init, tree.plan(), u)
        assert failure is None


def test_plan_applicable_but_tree_not(gatecrash_rp):
    # witness that the converse fails: a method precondition dies while
    # every action's own precondition survives
    from hrepair.ipyhopper import repair_ip
    from hrepair.model import apply_plan

    out = repair_ip(gatecrash_rp)
    assert out.status == "success"
    _, failure = apply_plan(gatecrash_rp.s_c, out.tree.plan(), gatecrash_rp.universe)
    assert failure is None
    assert not tree_applicable(out.tree, gatecrash_rp.s_c, gatecrash_rp.universe)


# -- plan_of ----------------------------------------------------------------


def test_plan_of_empty_root_sequence():
    tree = DecompositionTree(make_root([]))
    assert plan_of(tree) == ()


def test_plan_of_fork_upper_tree():
    assert plan_names(fork_tree()) == ["drive-out", "hand-over"]


def test_plan_length_equals_action_leaf_count():
    for stem in ("satellite", "rovers", "openstacks"):
        tree = solve_suite(load_suite(stem)).tree
        assert len(plan_of(tree)) == len(tree.action_leaves())


# -- split ------------------------------------------------------------------


def test_split_at_last_action_leaves_no_unexecuted_actions():
    tree = fork_tree()
    t_x, t_u = split(tree, tree.action_leaves()[-1])
    assert plan_of(t_u) == ()
    assert plan_names(t_x) == ["drive-out", "hand-over"]


def test_split_at_first_action_of_fork_tree():
    tree = fork_tree()
    t_x, t_u = split(tree, tree.action_leaves()[0])
    assert plan_names(t_u) == ["hand-over"]
    assert plan_names(t_x) == ["drive-out"]


def test_split_concatenation_identity():
    for stem in ("satellite", "rovers", "openstacks"):
        tree = solve_suite(load_suite(stem)).tree
        for a_c in tree.action_leaves():
            t_x, t_u = split(tree, a_c)
            assert plan_of(t_x) + plan_of(t_u) == plan_of(tree)


def test_split_requires_an_action_leaf():
    tree = fork_tree()
    with pytest.raises(StructuralError):
        split(tree, node_by_task(tree, "deliver"))


def test_partially_executed_tasks_appear_pruned_in_both():
    tree = solve_suite(load_suite("satellite")).tree
    t_x, t_u = split(tree, tree.action_leaves()[3])  # after turn-to-target
    x_tasks = {n.task.name for n in t_x.task_nodes()}
    u_tasks = {n.task.name for n in t_u.task_nodes()}
    assert "get-image" in x_tasks and "get-image" in u_tasks  # partially executed
    assert "prepare" in x_tasks and "prepare" not in u_tasks  # fully executed
    assert "acquire" in x_tasks and "acquire" in u_tasks  # straddles the cut


def test_split_preserves_first_child_flags_and_identity():
    tree = fork_tree()
    t_x, t_u = split(tree, tree.action_leaves()[0])
    handoff = node_by_task(t_u, "handoff")
    # handoff stays a non-first child even though its executed sibling
    # was pruned from the view
    assert not handoff.first_in_parent
    # the untouched subtree below handoff is the very same object
    assert handoff is node_by_task(tree, "handoff")


def test_split_then_merge_reproduces_tree_node_for_node():
    tree = solve_suite(load_suite("satellite")).tree
    a_c = tree.action_leaves()[2]
    t_x, t_u = split(tree, a_c)

    def merged(orig: TreeNode, x: TreeNode | None, u: TreeNode | None) -> bool:
        # every original node must be represented on the appropriate sides
        # with children partitioned in order
        reps = [r for r in (x, u) if r is not None]
        if not reps:
            return False
        for r in reps:
            if (r.kind, r.label) != (orig.kind, orig.label):
                return False
        child_reps: dict[int, list[TreeNode]] = {}
        for r in reps:
            for c in r.children:
                child_reps.setdefault(id(c.label) if c.label is not None else id(c), []).append(c)
        xi, ui = 0, 0
        for c in orig.children:
            cx = None
            cu = None
            if x is not None and xi < len(x.children) and x.children[xi].label is c.label:
                cx = x.children[xi]
                xi += 1
            if u is not None and ui < len(u.children) and u.children[ui].label is c.label:
                cu = u.children[ui]
                ui += 1
            if not merged(c, cx, cu):
                return False
        return (x is None or xi == len(x.children)) and (u is None or ui == len(u.children))

    assert merged(tree.root, t_x.root, t_u.root)


# -- exec_status ------------------------------------------------------------


def test_exec_status_three_ways():
    tree = solve_suite(load_suite("satellite")).tree
    a_c = tree.action_leaves()[2]  # calibrate: prepare fully executed
    assert exec_status(tree, a_c, node_by_task(tree, "prepare")) == FULLY_EXECUTED
    assert exec_status(tree, a_c, node_by_task(tree, "acquire")) == UNEXECUTED
    assert exec_status(tree, a_c, node_by_task(tree, "get-image")) == PARTIALLY_EXECUTED


def test_exec_status_ancestor_of_last_descendant_action():
    tree = fork_tree()
    hand_over = node_by_action(tree, "hand-over")
    assert exec_status(tree, hand_over, node_by_task(tree, "handoff")) == FULLY_EXECUTED


# -- replace ----------------------------------------------------------------


def m3_subtree():
    suite = fork_suite(("m1", "m3"))
    u = make_universe(suite.domain, suite.problem)
    s_c = State([GroundAtom("at-depot"), GroundAtom("courier-here")])
    res = solve(suite.domain, s_c, (GroundTask("deliver"),), SearchBudget(), u)
    assert res.status == "solved"
    return res.tree.root.children[0]


def test_replace_identity():
    tree = fork_tree()
    deliver = node_by_task(tree, "deliver")
    out = replace(tree, deliver, deliver)
    assert out.canonical_key() == tree.canonical_key()


def test_replace_single_equals_list_form():
    tree = fork_tree()
    deliver = node_by_task(tree, "deliver")
    sub = m3_subtree()
    a = replace(tree, deliver, sub)
    b = replace(tree, [deliver], [sub])
    assert a.canonical_key() == b.canonical_key()


def test_replacing_deliver_with_courier_subtree_gives_bottom_right():
    tree = fork_tree()
    out = replace(tree, node_by_task(tree, "deliver"), m3_subtree())
    assert plan_names(out) == ["courier-pickup"]
    assert [n.method.name for n in out.postorder() if n.kind == "method"] == ["m3"]


def test_replace_rejects_label_mismatch_and_overlap():
    tree = fork_tree()
    deliver = node_by_task(tree, "deliver")
    handoff = node_by_task(tree, "handoff")
    with pytest.raises(StructuralError):
        replace(tree, handoff, m3_subtree())  # label mismatch
    with pytest.raises(StructuralError):
        replace(tree, [deliver, handoff], [deliver, handoff])  # ancestral overlap


def test_replace_shares_untouched_nodes_and_states():
    tree = solve_suite(load_suite("satellite")).tree
    acquire = node_by_task(tree, "acquire")
    out = replace(tree, acquire, acquire)
    prepare_before = node_by_task(tree, "prepare")
    prepare_after = node_by_task(out, "prepare")
    assert prepare_before is prepare_after  # identity preserved
    assert prepare_after.input_state is prepare_before.input_state


def test_changed_node_count_zero_for_identity():
    tree = fork_tree()
    assert changed_node_count(tree, tree) == 0
    out = replace(tree, node_by_task(tree, "deliver"), m3_subtree())
    assert changed_node_count(tree, out) == 2  # the m3 method node and its action
