"""Simulation-backtracking repair (the plan-level strategy).

Instead of projecting aggregated preconditions, this strategy simulates
the unexecuted plan forward from the observed state, checking each
action's own precondition only.  Repair restarts at the failed
action's producing task, exhausts that subtree's decompositions, and
only then backtracks chronologically up the tree; after each candidate
the simulation runs again, and the simulate-repair cycle continues
until it completes or the root is exhausted.

Simulation goes through a pluggable transition interface so an
external predictor can stand in for the internal model.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Protocol

from .disturb import RepairProblem
from .model import (
    GroundAction,
    PlanFailure,
    State,
    Universe,
    apply_unchecked,
    first_falsified,
)
from .planner import Bound, SearchBudget
from .repairs import RepairOutcome, RepairSet, repair_enumerate, repair_search
from .tree import DecompositionTree


class Simulator(Protocol):
    """Transition predictor: returns the next state, or the failure evidence."""

    def step(self, state: State, action: GroundAction) -> tuple[Optional[State], Optional[str]]:
        ...


@dataclass
class InternalSimulator:
    """Default simulator backed by the domain's own transition function."""

    universe: Universe

    def step(self, state: State, action: GroundAction) -> tuple[Optional[State], Optional[str]]:
        bad = first_falsified(action.precondition, state, self.universe)
        if bad is not None:
            return None, bad
        return apply_unchecked(state, action, self.universe), None


def simulate(
    plan: tuple[GroundAction, ...],
    state: State,
    simulator: Simulator,
) -> tuple[State, Optional[PlanFailure]]:
    """Run the plan through the simulator; stop at the first failed action."""
    s = state
    for i, action in enumerate(plan):
        nxt, bad = simulator.step(s, action)
        if nxt is None:
            return s, PlanFailure(i, action, s, bad or "precondition failed")
        s = nxt
    return s, None


def _detector(rp: RepairProblem, simulator: Optional[Simulator] = None):
    sim = simulator or InternalSimulator(rp.universe)

    def detect(view: DecompositionTree) -> Optional[PlanFailure]:
        _, failure = simulate(view.plan(), rp.s_c, sim)
        return failure

    return detect


def repair_ip(
    rp: RepairProblem,
    budget: Optional[SearchBudget] = None,
    simulator: Optional[Simulator] = None,
) -> RepairOutcome:
    """Plan-level repair: accepted trees have a plan applicable in the observed state."""
    return repair_search(rp, _detector(rp, simulator), budget)


def repair_ip_all(
    rp: RepairProblem,
    bound: Bound,
    budget: Optional[SearchBudget] = None,
    simulator: Optional[Simulator] = None,
) -> RepairSet:
    """Every tree the nondeterministic plan-level repair can return."""
    return repair_enumerate(rp, _detector(rp, simulator), bound, budget)
