"""Ground-truth solution sets and containment checking.

The three repair strategies each define a set of acceptable repaired
unexecuted trees.  This module materializes those sets by bounded
exhaustive enumeration and machine-checks the relationships between
them: the tree-level set is contained in the plan-level set, and
anything in both the rewrite set and the plan-level set is also in the
tree-level set.  Enumeration here is written against the inductive
definitions directly, independent of the strategy modules' search
code, so agreement between the two is itself a meaningful check.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

from .disturb import RepairProblem
from .ipyhopper import repair_ip
from .model import apply_plan, apply_unchecked, eval_formula
from .planner import Bound, BudgetExceeded, SearchBudget, solve_all
from .repairs import (
    NO_REPAIR_NEEDED,
    SUCCESS,
    TIMEOUT_OUTCOME,
    UNREPAIRABLE,
    entry_state,
    graft,
    repair_points,
)
from .rewrite import repair_rw, rw_enumerate
from .shopfixer import repair_sf
from .tree import ACTION, DecompositionTree, TreeNode, pre_star, pre_star_chain

CLASS_REWRITE = 2
CLASS_TREE = 3
CLASS_PLAN = 4


@dataclass
class SolutionSet:
    """A class's repaired trees in canonical form, plus bound bookkeeping."""

    klass: int
    trees: dict[tuple, DecompositionTree] = field(default_factory=dict)
    bound: Optional[Bound] = None
    exhausted: bool = True
    reason: Optional[str] = None

    def keys(self) -> set:
        return set(self.trees)

    def __contains__(self, tree: DecompositionTree) -> bool:
        return tree.canonical_key() in self.trees

    def __len__(self) -> int:
        return len(self.trees)


def _first_tree_violation(rp: RepairProblem, view: DecompositionTree) -> Optional[TreeNode]:
    """Independent tree-level failure check: evaluate each action's full
    aggregated precondition formula at its projected state; on the first
    violated action, anchor at the topmost failing contributor of its
    first-child chain (a parent's precondition precedes its children's)."""
    state = rp.s_c
    for leaf in view.action_leaves():
        if not eval_formula(pre_star(view, leaf), state, rp.universe):
            for entry in pre_star_chain(view, leaf):
                if not eval_formula(entry.formula, state, rp.universe):
                    return entry.node
            return leaf  # unreachable: a failing conjunction has a failing part
        state = apply_unchecked(state, leaf.action, rp.universe)
    return None


def _first_plan_violation(rp: RepairProblem, view: DecompositionTree) -> Optional[TreeNode]:
    _, failure = apply_plan(rp.s_c, view.plan(), rp.universe)
    if failure is None:
        return None
    return view.action_leaves()[failure.index]


def _passes(rp: RepairProblem, view: DecompositionTree, klass: int) -> bool:
    """The class's base-case acceptance check."""
    if klass == CLASS_PLAN:
        return _first_plan_violation(rp, view) is None
    return _first_tree_violation(rp, view) is None


def enumerate_class(
    rp: RepairProblem,
    klass: int,
    bound: Bound,
    budget: Optional[SearchBudget] = None,
) -> SolutionSet:
    """Materialize one class's solution set within the bound.

    Class 2 comes from exhaustively solving the rewritten problem and
    decoding; classes 3 and 4 unfold the inductive definition: replace
    at an ancestor of the failure with any fresh solution subtree, base
    case when the class's applicability check passes.  Every member is
    re-verified against the class's definitional check regardless of
    how it was generated.
    """
    budget = budget or SearchBudget()
    if klass == CLASS_REWRITE:
        enum = rw_enumerate(rp, bound, budget)
        out = SolutionSet(klass, dict(enum.trees), bound, enum.exhausted, enum.reason)
    elif klass in (CLASS_TREE, CLASS_PLAN):
        out = _enumerate_inductive(rp, klass, bound, budget)
    else:
        raise ValueError(f"no solution-set semantics for class {klass}")
    for key, tree in out.trees.items():
        if not _verify_member(rp, tree, klass):
            raise AssertionError(f"enumerated class-{klass} member fails its definitional check: {key}")
    return out


def _verify_member(rp: RepairProblem, view: DecompositionTree, klass: int) -> bool:
    def labels(tree: DecompositionTree) -> list:
        return [c.label for c in tree.root.children]

    if klass == CLASS_REWRITE:
        # a rewritten solution may close out tasks inside the prefix, so its
        # unexecuted top tasks are an order-preserving subsequence of the
        # original task list; the decoded suffix of a start-state applicable
        # rewritten tree must itself project from the observed state
        remaining = list(rp.tasks)
        for lab in labels(view):
            task = lab if not hasattr(lab, "task") else lab.task
            while remaining and remaining[0] != task:
                remaining.pop(0)
            if not remaining:
                return False
            remaining.pop(0)
        return _first_tree_violation(rp, view) is None
    if labels(view) != labels(rp.t_u):
        return False
    return _passes(rp, view, klass)


def _enumerate_inductive(
    rp: RepairProblem, klass: int, bound: Bound, budget: SearchBudget
) -> SolutionSet:
    out = SolutionSet(klass, {}, bound)
    deadline = time.monotonic() + budget.wall_secs
    explored: dict[tuple, int] = {}
    violation = _first_tree_violation if klass == CLASS_TREE else _first_plan_violation

    def rec(view: DecompositionTree, rounds_left: int) -> None:
        if time.monotonic() > deadline:
            raise BudgetExceeded("wall-clock")
        bad = violation(rp, view)
        key = view.canonical_key()
        if bad is None:
            out.trees.setdefault(key, view)
            return
        if rounds_left == 0:
            out.exhausted = False
            out.reason = out.reason or "repair-rounds"
            return
        if explored.get(key, -1) >= rounds_left:
            return
        explored[key] = rounds_left
        for t_a in repair_points(view, bad):
            s_a = entry_state(view, t_a, rp.s_c, rp)
            if s_a is None:
                continue
            sols = solve_all(rp.domain, s_a, (t_a.task,), bound, budget, rp.universe)
            if not sols.exhausted:
                out.exhausted = False
                out.reason = out.reason or sols.reason
            for sol in sols.trees:
                rec(graft(view, t_a, sol), rounds_left - 1)

    try:
        rec(rp.t_u, budget.max_repair_rounds)
    except BudgetExceeded as stop:
        out.exhausted = False
        out.reason = stop.reason
    return out


# ---------------------------------------------------------------------------
# Theorem checking
# ---------------------------------------------------------------------------


@dataclass
class TheoremReport:
    """Verdicts for the set containments and algorithm memberships."""

    sets: dict[int, SolutionSet]
    exhausted: bool
    tree_subset_of_plan: Optional[bool]  # class 3 within class 4
    meet_subset_of_tree: Optional[bool]  # class 2 meet class 4 within class 3
    violations: list[tuple[str, tuple]] = field(default_factory=list)
    witnesses: dict[str, Optional[tuple]] = field(default_factory=dict)
    memberships: dict[str, Optional[bool]] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.violations and all(v is not False for v in self.memberships.values())

    def summary(self) -> dict:
        return {
            "exhausted": self.exhausted,
            "set_sizes": {k: len(s) for k, s in sorted(self.sets.items())},
            "tree_subset_of_plan": self.tree_subset_of_plan,
            "meet_subset_of_tree": self.meet_subset_of_tree,
            "violations": [name for name, _ in self.violations],
            "witnesses": {k: (v is not None) for k, v in self.witnesses.items()},
            "memberships": dict(self.memberships),
            "ok": self.ok,
        }


def check_theorems(
    rp: RepairProblem,
    bound: Bound,
    budget: Optional[SearchBudget] = None,
) -> TheoremReport:
    """Enumerate all three sets and verify their containments.

    Containments are only asserted when every enumeration exhausted its
    bounded space.  Nonempty set differences are recorded as witnesses;
    a violated containment lands in ``violations`` with a minimal
    counterexample key.  Deterministic strategy outputs are checked for
    membership in their sets.
    """
    budget = budget or SearchBudget()
    sets = {k: enumerate_class(rp, k, bound, budget) for k in (2, 3, 4)}
    exhausted = all(s.exhausted for s in sets.values())
    report = TheoremReport(sets, exhausted, None, None)

    k2, k3, k4 = sets[2].keys(), sets[3].keys(), sets[4].keys()
    if exhausted:
        bad_34 = sorted(k3 - k4)
        report.tree_subset_of_plan = not bad_34
        if bad_34:
            report.violations.append(("tree-set not within plan-set", bad_34[0]))
        bad_meet = sorted((k2 & k4) - k3)
        report.meet_subset_of_tree = not bad_meet
        if bad_meet:
            report.violations.append(("rewrite/plan meet escapes tree-set", bad_meet[0]))
        report.witnesses["rewrite-only"] = min(k2 - k3, default=None)
        report.witnesses["tree-not-rewrite"] = min(k3 - k2, default=None)
        report.witnesses["plan-not-rewrite"] = min(k4 - k2, default=None)
        report.witnesses["plan-not-tree"] = min(k4 - k3, default=None)

    for name, runner, klass in (("rw", repair_rw, 2), ("sf", repair_sf, 3), ("ip", repair_ip, 4)):
        outcome = runner(rp, budget)
        if outcome.status == TIMEOUT_OUTCOME or not sets[klass].exhausted:
            report.memberships[name] = None
        elif outcome.status in (SUCCESS, NO_REPAIR_NEEDED):
            assert outcome.tree is not None
            report.memberships[name] = outcome.tree.canonical_key() in sets[klass].trees
        elif outcome.status == UNREPAIRABLE:
            report.memberships[name] = len(sets[klass]) == 0
        else:
            report.memberships[name] = None
        if report.memberships[name] is False:
            report.violations.append((f"{name} output outside its solution set", ()))
    return report
