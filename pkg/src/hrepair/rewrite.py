"""Repair by problem rewriting.

Compiles a repair problem into a fresh domain/problem pair whose
solutions are exactly the decompositions that replay the executed
action prefix verbatim and then continue from the observed state: a
position counter threads through prefix copies of the executed
actions, the last copy additionally carries the observed-state delta,
and every other action is gated on the counter having reached the end.
Solving the compiled problem with any planner and mapping the copies
back to their originals yields the repaired unexecuted tree.
"""

from __future__ import annotations

from dataclasses import dataclass, replace as dc_replace
from typing import Optional

from .disturb import RepairProblem
from .errors import DecodeError
from .hddl import format_domain, format_problem
from .model import (
    DUMMY_NAME,
    TRUTH,
    ActionSchema,
    Domain,
    Effect,
    EffectBranch,
    GroundAction,
    GroundAtom,
    GroundTask,
    Literal,
    MethodSchema,
    Problem,
    State,
    Universe,
    apply_unchecked,
    conjoin,
    ground_action,
)
from .planner import (
    Bound,
    SOLVED,
    SearchBudget,
    TIMEOUT,
    solve,
    solve_all,
)
from .repairs import (
    NO_REPAIR_NEEDED,
    RepairOutcome,
    RepairSet,
    SUCCESS,
    TIMEOUT_OUTCOME,
    UNREPAIRABLE,
)
from .tree import ACTION, DecompositionTree, TreeNode, split


@dataclass
class RewrittenProblem:
    """The compiled prefix-forcing domain and its initial situation."""

    domain: Domain
    universe: Universe
    init: State
    tasks: tuple[GroundTask, ...]
    prefix: tuple[GroundAction, ...]  # the original executed actions, in order
    step_pred: str
    steps: tuple[str, ...]  # marker constants step0..stepN


def _fresh(base: str, taken: set[str]) -> str:
    name = base
    k = 1
    while name in taken:
        name = f"{base}{k}"
        k += 1
    return name


def compile_repair(rp: RepairProblem) -> RewrittenProblem:
    """Build the rewritten domain: solvable iff the plan can be repaired.

    Every solution's plan starts with position-tracking copies of the
    executed prefix, so the prefix is matched identically; the final
    copy's effects fold in the disturbance, producing the observed
    state.  Compilation is total.
    """
    n = len(rp.pi_x)
    src = rp.domain
    step_pred = _fresh("prefix-step", set(src.predicates))
    step_type = _fresh("prefix-step-idx", set(src.types) | {"object"})
    taken_objs = set(rp.universe.objects)
    steps = tuple(_fresh(f"step{i}", taken_objs) for i in range(n + 1))

    def marker(i: int) -> Literal:
        return Literal(step_pred, (steps[i],))

    done = marker(n)

    actions: dict[str, tuple[ActionSchema, ...]] = {}
    for name, variants in src.actions.items():
        actions[name] = tuple(
            dc_replace(s, precondition=conjoin(s.precondition, done)) for s in variants
        )
    actions[DUMMY_NAME] = (ActionSchema(DUMMY_NAME, (), done, Effect(), 0.0),)

    # Each copy can only ever fire at its own position, where its input
    # state is pinned by the forced replay, so its effect is encoded as
    # the exact state delta at that position; the final copy's delta
    # targets the observed state, folding the disturbance in.
    ground_copies: dict[tuple[str, tuple[str, ...]], tuple[GroundAction, ...]] = {}
    before = rp.s0
    for i, a in enumerate(rp.pi_x, start=1):
        after = apply_unchecked(before, a, rp.universe) if i < n else rp.s_c
        branch = EffectBranch(
            adds=tuple((at.predicate, at.args) for at in sorted(after.atoms - before.atoms))
            + ((step_pred, (steps[i],)),),
            deletes=tuple((at.predicate, at.args) for at in sorted(before.atoms - after.atoms))
            + ((step_pred, (steps[i - 1],)),),
        )
        copy = GroundAction(
            a.name,
            a.args,
            conjoin(a.precondition, marker(i - 1)),
            Effect((branch,)),
            a.cost,
            variant=f"pos{i}",
        )
        key = (a.name, a.args)
        ground_copies[key] = ground_copies.get(key, ()) + (copy,)
        before = after

    domain = Domain(
        name=f"{src.name}-rewritten",
        types={**src.types, step_type: None},
        predicates={**src.predicates, step_pred: (step_type,)},
        constants=dict(src.constants),
        actions=actions,
        methods=src.methods,
        tasks=dict(src.tasks),
        requirements=src.requirements,
        ground_actions=ground_copies,
    )
    objects = dict(rp.universe.objects)
    objects.update({s: step_type for s in steps})
    universe = Universe(domain.types, objects, domain.predicates)
    base = rp.s0 if n > 0 else rp.s_c
    init = State(set(base.atoms) | {GroundAtom(step_pred, (steps[0],))})
    return RewrittenProblem(domain, universe, init, rp.tasks, rp.pi_x, step_pred, steps)


def decode(tree: DecompositionTree, rw: RewrittenProblem, rp: RepairProblem) -> DecompositionTree:
    """Map a rewritten solution back: verify the prefix, un-rewrite the rest.

    Returns the repaired unexecuted tree (the part after the last
    prefix copy) with every rewritten action replaced by its
    un-rewritten equivalent.  A prefix mismatch is a compilation
    soundness violation and raises DecodeError.
    """
    plan = tree.plan()
    n = len(rw.prefix)
    if len(plan) < n:
        raise DecodeError(f"solution plan shorter than the executed prefix ({len(plan)} < {n})")
    for i in range(n):
        got, want = plan[i], rw.prefix[i]
        if got.variant != f"pos{i + 1}" or (got.name, got.args) != (want.name, want.args):
            raise DecodeError(
                f"prefix mismatch at position {i + 1}: expected {want}, decoded {got}"
            )
    for a in plan[n:]:
        if a.variant is not None:
            raise DecodeError(f"rewritten copy {a} escaped past the prefix")

    def unrewrite(node: TreeNode) -> TreeNode:
        children = [unrewrite(c) for c in node.children]
        label = node.label
        if node.kind == ACTION:
            ga: GroundAction = label  # type: ignore[assignment]
            if ga.name == DUMMY_NAME:
                label = ground_action(ActionSchema(DUMMY_NAME, (), TRUTH, Effect(), 0.0), ())
            else:
                label = ground_action(
                    next(s for s in rp.domain.actions[ga.name] if s.variant is None), ga.args
                )
        return TreeNode(node.kind, label, children, node.first_in_parent, node.input_state)

    full = DecompositionTree(unrewrite(tree.root))
    a_c = full.action_leaves()[n - 1] if n > 0 else None
    _, t_u = split(full, a_c)
    return t_u


def repair_rw(rp: RepairProblem, budget: Optional[SearchBudget] = None) -> RepairOutcome:
    """Compile, solve, decode.

    Unrepairable only when the compiled problem is proven unsolvable
    within the search bounds; resource exhaustion stays a timeout.
    """
    budget = budget or SearchBudget()
    rw = compile_repair(rp)
    result = solve(rw.domain, rw.init, rw.tasks, budget, rw.universe)
    if result.status == SOLVED:
        assert result.tree is not None
        return RepairOutcome(SUCCESS, decode(result.tree, rw, rp))
    if result.status == TIMEOUT:
        return RepairOutcome(TIMEOUT_OUTCOME, None, 0, result.reason)
    return RepairOutcome(UNREPAIRABLE)


def rw_enumerate(rp: RepairProblem, bound: Bound, budget: Optional[SearchBudget] = None) -> RepairSet:
    """All decoded repairs of the compiled problem within the bound."""
    budget = budget or SearchBudget()
    rw = compile_repair(rp)
    enum = solve_all(rw.domain, rw.init, rw.tasks, bound, budget, rw.universe)
    out = RepairSet(exhausted=enum.exhausted, reason=enum.reason)
    for tree in enum.trees:
        decoded = decode(tree, rw, rp)
        out.trees.setdefault(decoded.canonical_key(), decoded)
    return out


# ---------------------------------------------------------------------------
# HDDL emission, so an external planner can be substituted
# ---------------------------------------------------------------------------


def emit_hddl(rw: RewrittenProblem, rp: RepairProblem, problem_name: str = "rewritten") -> tuple[str, str]:
    """Render the compiled problem as plain HDDL files.

    Ground prefix copies become fresh zero-parameter actions; every
    action name that occurs in the prefix is routed through a wrapper
    compound task whose methods choose between the position copies and
    the end-gated original, so the shared-name trick needs no support
    from the consuming planner.  Methods with no subtasks get an
    explicit end-gated no-op so that empty decompositions cannot fire
    mid-prefix.
    """
    src = rw.domain
    taken = set(src.tasks) | set(src.actions) | {DUMMY_NAME}
    prefix_names = {a.name for a in rw.prefix}
    has_empty_method = any(not m.subtasks for m in src.methods)
    noop_done = _fresh("noop-end", taken)
    done_gate = Literal(rw.step_pred, (rw.steps[-1],))

    wrapper: dict[str, str] = {}
    for name in sorted(prefix_names):
        wrapper[name] = _fresh(f"do-{name}" if name != DUMMY_NAME else "do-noop", taken)
        taken.add(wrapper[name])

    out = Domain(
        name=src.name,
        types=dict(src.types),
        predicates=dict(src.predicates),
        constants=dict(src.constants),
        requirements=src.requirements or (":htn", ":typing", ":negative-preconditions", ":method-preconditions"),
    )
    # originals (already end-gated in rw.domain)
    for name, variants in src.actions.items():
        for schema in variants:
            if name == DUMMY_NAME:
                continue
            out.actions[name] = (schema,)
    if has_empty_method or DUMMY_NAME in prefix_names:
        out.actions[noop_done] = (ActionSchema(noop_done, (), done_gate, Effect(), 0.0),)

    # ground prefix copies as fresh zero-parameter actions
    copy_names: dict[tuple[str, tuple[str, ...], str], str] = {}
    for key, copies in src.ground_actions.items():
        for ga in copies:
            base = "noop" if ga.name == DUMMY_NAME else ga.name
            cname = _fresh(f"{base}-{ga.variant}", taken)
            taken.add(cname)
            copy_names[(ga.name, ga.args, ga.variant or "")] = cname
            out.actions[cname] = (
                ActionSchema(cname, (), ga.precondition, ga.effect, ga.cost),
            )

    # wrapper tasks and their dispatch methods
    for name, wname in wrapper.items():
        if name == DUMMY_NAME:
            params: tuple[tuple[str, str], ...] = ()
        else:
            params = src.actions[name][0].params
        out.tasks[wname] = tuple(t for _, t in params)
        param_vars = tuple(v for v, _ in params)
        if name == DUMMY_NAME:
            out.methods = out.methods + (
                MethodSchema(f"m-{wname}-end", (wname, ()), (), TRUTH, ((noop_done, ()),)),
            )
        else:
            out.methods = out.methods + (
                MethodSchema(
                    f"m-{wname}-orig",
                    (wname, param_vars),
                    params,
                    TRUTH,
                    ((name, param_vars),),
                ),
            )
        for (aname, aargs, variant), cname in sorted(copy_names.items()):
            if aname != name:
                continue
            out.methods = out.methods + (
                MethodSchema(f"m-{wname}-{variant}", (wname, aargs), (), TRUTH, ((cname, ()),)),
            )

    # user tasks and methods with prefix-named subtasks rerouted
    out.tasks.update(src.tasks)
    for m in src.methods:
        subtasks = tuple(
            (wrapper.get(sub, sub), args) for sub, args in (m.subtasks or ())
        )
        if not m.subtasks:
            subtasks = ((wrapper.get(DUMMY_NAME, noop_done), ()),)
        out.methods = out.methods + (MethodSchema(m.name, m.task, m.params, m.precondition, subtasks),)

    tasks = tuple(
        GroundTask(wrapper.get(t.name, t.name), t.args) for t in rw.tasks
    )
    objects = {o: t for o, t in rw.universe.objects.items() if o not in src.constants}
    problem = Problem(problem_name, out.name, objects, rw.init, tasks)
    return format_domain(out), format_problem(problem)
