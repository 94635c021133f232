"""Disturbance injection and repair-problem classification.

A disturbance is applied after the last executed action's own effects,
so the observed state folds the action's outcome and the exogenous
change together.  Classification distinguishes normal execution, a
bare anomaly, a predicted task failure (some unexecuted node's
aggregated precondition is violated under projection), and a predicted
action failure (some unexecuted action's own precondition is violated).
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Optional, Union

from .errors import HrepairError, StructuralError
from .hddl import RANDOM_PLACEMENT, DisturbanceSpec
from .model import (
    Domain,
    GroundAction,
    GroundTask,
    Problem,
    State,
    Universe,
    apply_unchecked,
    effect_delta,
    eval_formula,
    make_universe,
    PlanFailure,
    apply_plan,
)
from .tree import (
    DecompositionTree,
    TreeFailure,
    TreeNode,
    find_tree_failure,
    split,
)


class InapplicableDisturbanceError(HrepairError):
    """The disturbance guard holds at none of the requested positions."""

    def __init__(self, name: str, tried: tuple[int, ...]):
        super().__init__(f"disturbance {name!r} guard holds at no position (tried {list(tried)})")
        self.tried = tried


@dataclass
class RepairProblem:
    """A partially executed tree, the observed state, and the split views."""

    domain: Domain
    universe: Universe
    s0: State
    tasks: tuple[GroundTask, ...]
    tree: DecompositionTree
    a_c: Optional[TreeNode]  # last executed action leaf; None = nothing executed
    s_c: State
    disturbance: Optional[DisturbanceSpec]
    position: int  # number of executed actions, len(pi_x)

    def __post_init__(self) -> None:
        self.t_x, self.t_u = split(self.tree, self.a_c)
        self.pi_x = self.t_x.plan()
        self.pi_u = self.t_u.plan()
        s = self.s0
        for a in self.pi_x:
            s = apply_unchecked(s, a, self.universe)
        self.predicted = s

    @property
    def anomaly(self) -> bool:
        return self.s_c != self.predicted


def make_repair_problem(
    domain: Domain,
    problem: Problem,
    tree: DecompositionTree,
    position: int,
    s_c: State,
    disturbance: Optional[DisturbanceSpec] = None,
) -> RepairProblem:
    """Build a RepairProblem with a_c at the given 1-based plan position."""
    universe = make_universe(domain, problem)
    leaves = tree.action_leaves()
    if position < 0 or position > len(leaves):
        raise StructuralError(f"position {position} outside plan of length {len(leaves)}")
    a_c = leaves[position - 1] if position > 0 else None
    return RepairProblem(domain, universe, problem.init, problem.tasks, tree, a_c, s_c, disturbance, position)


def inject(
    tree: DecompositionTree,
    domain: Domain,
    problem: Problem,
    spec: DisturbanceSpec,
    position: Union[int, str, None] = None,
    rng: Optional[random.Random] = None,
) -> RepairProblem:
    """Apply a disturbance after an executed action and observe the result.

    ``position`` overrides the spec's placement; ``random`` draws
    uniformly among guard-satisfying positions 1..n using ``rng``, so a
    fixed seed reproduces the same placement.  Raises
    InapplicableDisturbanceError when the guard holds nowhere.
    """
    universe = make_universe(domain, problem)
    placement = spec.placement if position is None else position
    plan = tree.plan()

    def state_after(k: int) -> State:
        s = problem.init
        for a in plan[:k]:
            s = apply_unchecked(s, a, universe)
        return s

    if placement == RANDOM_PLACEMENT:
        candidates = [
            k for k in range(1, len(plan) + 1)
            if eval_formula(spec.precondition, state_after(k), universe)
        ]
        if not candidates:
            raise InapplicableDisturbanceError(spec.name, tuple(range(1, len(plan) + 1)))
        rng = rng or random.Random(0)
        k = rng.choice(candidates)
    else:
        k = int(placement)
        if k < 0 or k > len(plan):
            raise StructuralError(f"placement {k} outside plan of length {len(plan)}")
        if not eval_formula(spec.precondition, state_after(k), universe):
            raise InapplicableDisturbanceError(spec.name, (k,))

    base = state_after(k)
    deletes, adds = effect_delta(spec.effect, base, universe)
    s_c = base.updated(deletes, adds)
    return make_repair_problem(domain, problem, tree, k, s_c, spec)


# ---------------------------------------------------------------------------
# Classification
# ---------------------------------------------------------------------------

CLASS_NORMAL = 1
CLASS_ANOMALY = 2
CLASS_TASK_FAILURE = 3
CLASS_ACTION_FAILURE = 4


@dataclass(frozen=True)
class FailureReport:
    """Most specific repair class plus the per-class evidence."""

    classification: int
    anomaly: bool
    task_failure: Optional[TreeFailure]  # d_f: earliest pre*-violated node, parents first
    action_failure: Optional[PlanFailure]  # a_f: first pre-violated unexecuted action

    @property
    def needs_repair(self) -> bool:
        return self.task_failure is not None


def classify(rp: RepairProblem) -> FailureReport:
    """Classify a repair problem against the observed state."""
    anomaly = rp.anomaly
    task_failure = find_tree_failure(rp.t_u, rp.s_c, rp.universe)
    _, action_failure = apply_plan(rp.s_c, rp.pi_u, rp.universe)
    if action_failure is not None:
        cls = CLASS_ACTION_FAILURE
    elif task_failure is not None:
        cls = CLASS_TASK_FAILURE
    elif anomaly:
        cls = CLASS_ANOMALY
    else:
        cls = CLASS_NORMAL
    return FailureReport(cls, anomaly, task_failure, action_failure)
