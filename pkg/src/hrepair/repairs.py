"""Shared repair machinery for the backjumping and simulation strategies.

Both strategies repair the unexecuted tree by the same protocol and
differ only in how they detect failure and accept a candidate:

* pick a repair point: an ancestor task of the failure node, nearest
  first, escalating rootward only when everything below is exhausted;
* replan that task from scratch against the state its unexecuted
  portion would start in (the observed state projected over any
  unexecuted actions that come before it);
* graft the fresh subtree over the task's unexecuted portion.  A
  partially executed task keeps its already-executed work in the
  executed part of the plan; the fresh subtree re-achieves the task
  from the current state rather than undoing anything;
* accept when the strategy's failure detector goes quiet, otherwise
  recurse on the new failure.

The exhaustive variant enumerates every reachable repaired tree within
a bound, which is what the ground-truth solution sets are built from.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional, Union

from .disturb import RepairProblem
from .model import PlanFailure, State, apply_unchecked, eval_formula
from .planner import Bound, BudgetExceeded, SearchBudget, iter_solutions, solve_all
from .tree import (
    ACTION,
    TASK,
    DecompositionTree,
    TreeFailure,
    TreeNode,
    replace,
)

SUCCESS = "success"
NO_REPAIR_NEEDED = "no-repair-needed"
UNREPAIRABLE = "proven-unrepairable"
TIMEOUT_OUTCOME = "timeout"

Failure = Union[TreeFailure, PlanFailure]
Detector = Callable[[DecompositionTree], Optional[Failure]]


@dataclass
class RepairOutcome:
    status: str
    tree: Optional[DecompositionTree] = None  # repaired unexecuted tree
    rounds: int = 0
    reason: Optional[str] = None

    @property
    def succeeded(self) -> bool:
        return self.status in (SUCCESS, NO_REPAIR_NEEDED)


def failure_node(view: DecompositionTree, failure: Failure) -> TreeNode:
    """The tree node a failure anchors to: d_f for a tree failure, a_f for a plan failure."""
    if isinstance(failure, TreeFailure):
        return failure.node
    return view.action_leaves()[failure.index]


def repair_points(view: DecompositionTree, node: TreeNode) -> list[TreeNode]:
    """Ancestor task nodes of the failure node, nearest first."""
    path = view.path_to(node)
    return [n for n in reversed(path[:-1]) if n.kind == TASK]


def entry_state(view: DecompositionTree, node: TreeNode, s_c: State, rp: RepairProblem) -> Optional[State]:
    """Observed state projected over unexecuted actions preceding the node's subtree.

    Returns None when that replay is itself inapplicable, which forces
    escalation to an earlier repair point.
    """
    leaves = view.action_leaves()
    sub_leaves = {id(n) for n in _subtree_actions(node)}
    s = s_c
    for leaf in leaves:
        if id(leaf) in sub_leaves:
            return s
        if not eval_formula(leaf.action.precondition, s, rp.universe):
            return None
        s = apply_unchecked(s, leaf.action, rp.universe)
    return s  # node has no unexecuted actions below it: replan from the end state


def _subtree_actions(node: TreeNode) -> Iterator[TreeNode]:
    if node.kind == ACTION:
        yield node
        return
    for c in node.children:
        yield from _subtree_actions(c)


def graft(view: DecompositionTree, target: TreeNode, solution: DecompositionTree) -> DecompositionTree:
    """Replace the target task's unexecuted portion with a fresh decomposition."""
    fresh = solution.root.children[0]
    return replace(view, target, fresh)


def candidate_stream(
    rp: RepairProblem,
    view: DecompositionTree,
    anchor: TreeNode,
    budget: SearchBudget,
    deadline: float,
) -> Iterator[tuple[TreeNode, DecompositionTree]]:
    """(repair point, fresh subtree) pairs in deterministic repair order."""
    for t_a in repair_points(view, anchor):
        s_a = entry_state(view, t_a, rp.s_c, rp)
        if s_a is None:
            continue
        remaining = deadline - time.monotonic()
        if remaining <= 0:
            raise BudgetExceeded("wall-clock")
        sub_budget = budget.with_wall(remaining)
        for sol in iter_solutions(rp.domain, s_a, (t_a.task,), sub_budget, rp.universe):
            yield t_a, graft(view, t_a, sol)


def repair_search(
    rp: RepairProblem,
    detect: Detector,
    budget: Optional[SearchBudget] = None,
) -> RepairOutcome:
    """Deterministic instance of the nondeterministic repair recursion.

    ``detect`` returns the strategy's failure evidence or None; a view
    with no detectable failure is accepted.  Candidates are explored
    depth-first with full backtracking, bounded by the repair-round
    budget; exhausting them proves unrepairability within the bound.
    """
    budget = budget or SearchBudget()
    start = time.monotonic()
    deadline = start + budget.wall_secs

    first = detect(rp.t_u)
    if first is None:
        return RepairOutcome(NO_REPAIR_NEEDED, rp.t_u, 0)

    bounded = False

    def rec(view: DecompositionTree, failure: Failure, rounds: int, seen: frozenset) -> Optional[DecompositionTree]:
        nonlocal bounded
        if rounds >= budget.max_repair_rounds:
            bounded = True
            return None
        anchor = failure_node(view, failure)
        for _, candidate in candidate_stream(rp, view, anchor, budget, deadline):
            key = candidate.canonical_key()
            if key in seen:
                continue
            nxt = detect(candidate)
            if nxt is None:
                return candidate
            result = rec(candidate, nxt, rounds + 1, seen | {key})
            if result is not None:
                return result
        return None

    try:
        repaired = rec(rp.t_u, first, 0, frozenset({rp.t_u.canonical_key()}))
    except BudgetExceeded as stop:
        return RepairOutcome(TIMEOUT_OUTCOME, None, 0, stop.reason)
    if repaired is not None:
        return RepairOutcome(SUCCESS, repaired)
    if bounded:
        return RepairOutcome(TIMEOUT_OUTCOME, None, 0, "repair-rounds")
    return RepairOutcome(UNREPAIRABLE)


@dataclass
class RepairSet:
    """All repaired unexecuted trees reachable within a bound."""

    trees: dict[tuple, DecompositionTree] = field(default_factory=dict)
    exhausted: bool = True
    reason: Optional[str] = None

    def keys(self) -> set:
        return set(self.trees)


def repair_enumerate(
    rp: RepairProblem,
    detect: Detector,
    bound: Bound,
    budget: Optional[SearchBudget] = None,
) -> RepairSet:
    """Every repaired tree reachable by the repair recursion, within bounds.

    The zero-round base case admits the unexecuted tree itself when no
    failure is detectable.  Rounds are gated on a detected failure, as
    the inductive definitions require; hitting the round or enumeration
    bound clears ``exhausted`` instead of silently truncating.
    """
    budget = budget or SearchBudget()
    out = RepairSet()
    deadline = time.monotonic() + budget.wall_secs
    explored: dict[tuple, int] = {}

    def rec(view: DecompositionTree, rounds_left: int) -> None:
        key = view.canonical_key()
        failure = detect(view)
        if failure is None:
            out.trees.setdefault(key, view)
            return
        if rounds_left == 0:
            out.exhausted = False
            out.reason = out.reason or "repair-rounds"
            return
        if explored.get(key, -1) >= rounds_left:
            return
        explored[key] = rounds_left
        anchor = failure_node(view, failure)
        for t_a in repair_points(view, anchor):
            s_a = entry_state(view, t_a, rp.s_c, rp)
            if s_a is None:
                continue
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise BudgetExceeded("wall-clock")
            sols = solve_all(rp.domain, s_a, (t_a.task,), bound, budget.with_wall(remaining), rp.universe)
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
