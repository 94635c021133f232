"""Seeded random micro-instances for the containment-property campaign.

Instances are deliberately tiny and propositional: a handful of atoms,
at most four decomposition methods, trees at most three methods deep.
Disturbances delete an atom some unexecuted action still needs (and
sometimes add noise), so the instances that do fail engage the
plan-level repair definition rather than stranding a method
precondition alone.  Method preconditions, when present, repeat a
conjunct of the method's first action so the aggregated-precondition
machinery is exercised without changing which states satisfy it.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Optional

from .disturb import RepairProblem, make_repair_problem
from .hddl import DisturbanceSpec
from .model import (
    TRUTH,
    ActionSchema,
    And,
    Domain,
    Effect,
    EffectBranch,
    GroundAtom,
    GroundTask,
    Literal,
    MethodSchema,
    Problem,
    State,
    apply_unchecked,
    make_universe,
)
from .planner import SearchBudget, solve


@dataclass
class MicroInstance:
    domain: Domain
    problem: Problem
    rp: RepairProblem
    seed: int


def _random_domain(rng: random.Random) -> tuple[Domain, State]:
    n_atoms = rng.randint(4, 6)
    atoms = [f"p{i}" for i in range(n_atoms)]
    predicates = {a: () for a in atoms}

    def some_atoms(k: int) -> list[str]:
        return rng.sample(atoms, k)

    actions: dict[str, tuple[ActionSchema, ...]] = {}
    n_actions = rng.randint(3, 5)
    for i in range(n_actions):
        pre_atoms = some_atoms(rng.randint(1, 2))
        adds = some_atoms(rng.randint(1, 2))
        dels = some_atoms(rng.randint(0, 2))
        pre = And(tuple(Literal(a) for a in pre_atoms)) if len(pre_atoms) > 1 else Literal(pre_atoms[0])
        eff = Effect(
            (
                EffectBranch(
                    adds=tuple((a, ()) for a in adds),
                    deletes=tuple((d, ()) for d in dels),
                ),
            )
        )
        name = f"a{i}"
        actions[name] = (ActionSchema(name, (), pre, eff),)

    action_names = sorted(actions)
    tasks = {"t0": (), "t1": ()}
    methods: list[MethodSchema] = []

    def method_pre(first_action: str) -> tuple:
        schema = actions[first_action][0]
        pre = schema.precondition
        literals = pre.parts if isinstance(pre, And) else (pre,)
        if rng.random() < 0.5:
            return (rng.choice(literals),)
        return ()

    def subtask_pattern(allow_recurse: bool) -> tuple[tuple[str, tuple], ...]:
        a = rng.choice(action_names)
        shape = rng.random()
        if shape < 0.4:
            return ((a, ()),)
        if shape < 0.7 or not allow_recurse:
            return ((a, ()), (rng.choice(action_names), ()))
        return ((a, ()), ("t1", ()))

    n_methods_t0 = rng.randint(1, 2)
    n_methods_t1 = rng.randint(1, 2)
    for i in range(n_methods_t0):
        subs = subtask_pattern(allow_recurse=True)
        pre = method_pre(subs[0][0])
        methods.append(MethodSchema(f"m0-{i}", ("t0", ()), (), pre[0] if pre else TRUTH, subs))
    for i in range(n_methods_t1):
        subs = subtask_pattern(allow_recurse=False)
        pre = method_pre(subs[0][0])
        methods.append(MethodSchema(f"m1-{i}", ("t1", ()), (), pre[0] if pre else TRUTH, subs))

    domain = Domain(
        name="micro",
        predicates=predicates,
        actions=actions,
        methods=tuple(methods),
        tasks=tasks,
    )
    init = State(GroundAtom(a) for a in atoms if rng.random() < 0.6)
    return domain, init


def random_micro_instance(seed: int, budget: Optional[SearchBudget] = None) -> Optional[MicroInstance]:
    """One seeded instance: solvable domain, mid-plan disturbance, repair problem.

    Returns None when the drawn domain is unsolvable or its plan is too
    short to leave both an executed prefix and an unexecuted suffix.
    """
    rng = random.Random(seed)
    budget = budget or SearchBudget(wall_secs=5.0, max_depth=10)
    domain, init = _random_domain(rng)
    problem = Problem("micro", "micro", {}, init, (GroundTask("t0"),))
    universe = make_universe(domain, problem)
    result = solve(domain, init, problem.tasks, budget, universe)
    if result.status != "solved" or result.tree is None:
        return None
    plan = result.tree.plan()
    real = [a for a in plan if not a.is_dummy()]
    if len(real) < 2:
        return None

    position = rng.randint(1, len(plan) - 1)
    suffix = plan[position:]
    wanted: list[str] = []
    for a in suffix:
        pre = a.precondition
        literals = pre.parts if isinstance(pre, And) else (pre,)
        wanted.extend(l.predicate for l in literals if isinstance(l, Literal) and l.positive)
    if not wanted:
        return None
    target = rng.choice(sorted(set(wanted)))
    deletes: list[tuple[str, tuple]] = [(target, ())]
    adds: list[tuple[str, tuple]] = []
    if rng.random() < 0.3:
        adds.append((rng.choice(sorted(domain.predicates)), ()))
    spec = DisturbanceSpec(
        "glitch",
        TRUTH,
        Effect((EffectBranch(adds=tuple(adds), deletes=tuple(deletes)),)),
        position,
    )

    s = init
    for a in plan[:position]:
        s = apply_unchecked(s, a, universe)
    s_c = s.updated({GroundAtom(t, ()) for t, _ in deletes}, {GroundAtom(t, ()) for t, _ in adds})
    rp = make_repair_problem(domain, problem, result.tree, position, s_c, spec)
    return MicroInstance(domain, problem, rp, seed)
