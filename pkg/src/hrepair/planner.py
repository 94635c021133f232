"""Deterministic depth-first total-order HTN planner.

The search decomposes the frontmost pending task, trying methods in
source order and variable bindings in lexicographic order, so equal
inputs always produce the same tree.  A choice-point trail can be
recorded to support resuming: ``resume_from`` replays recorded
decisions up to a jump target, substitutes the observed state at the
executed-prefix boundary, and never re-opens the executed actions
themselves.

Solutions are produced as a lazy stream; ``solve`` takes the first,
``solve_all`` drains every branch within a depth/node bound and
reports whether the bounded space was exhausted.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from typing import Iterator, Optional

from .errors import StructuralError
from .model import (
    DUMMY_NAME,
    Domain,
    GroundAction,
    GroundMethod,
    GroundTask,
    State,
    Universe,
    apply_unchecked,
    eval_formula,
    ground_action,
    ground_method,
    is_var,
)
from .tree import ACTION, METHOD, ROOT, TASK, DecompositionTree, TreeNode, _deep_copy

SOLVED = "solved"
UNSOLVABLE = "unsolvable"
TIMEOUT = "timeout"


@dataclass
class SearchBudget:
    """Resource limits; exceeding any of them aborts with a timeout outcome,
    never a wrong answer."""

    wall_secs: float = 300.0
    max_expansions: int = 1_000_000
    max_depth: int = 64
    max_repair_rounds: int = 12

    def with_wall(self, secs: float) -> "SearchBudget":
        return SearchBudget(secs, self.max_expansions, self.max_depth, self.max_repair_rounds)


@dataclass(frozen=True)
class Bound:
    """Enumeration bound; both limits are required."""

    max_depth: int
    max_nodes: int


@dataclass
class ChoicePoint:
    """One recorded decomposition decision."""

    task: GroundTask
    path: tuple[int, ...]  # child-index path from the root to the task node
    entry_state: State
    entry_emitted: int
    candidates: tuple[tuple[str, tuple[str, ...]], ...]  # (method, args) in order
    chosen: int


@dataclass
class PlanResult:
    status: str
    tree: Optional[DecompositionTree] = None
    expansions: int = 0
    reason: Optional[str] = None
    trail: Optional[list[ChoicePoint]] = None


@dataclass
class EnumerationResult:
    trees: list[DecompositionTree] = field(default_factory=list)
    exhausted: bool = True
    reason: Optional[str] = None
    expansions: int = 0


class BudgetExceeded(Exception):
    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


class _Engine:
    def __init__(
        self,
        domain: Domain,
        universe: Universe,
        budget: SearchBudget,
        *,
        bound: Optional[Bound] = None,
        frozen: tuple[GroundAction, ...] = (),
        observed: Optional[State] = None,
        script: tuple[tuple[str, tuple[str, ...]], ...] = (),
        record_trail: bool = False,
        cycle_check: bool = True,
    ):
        self.domain = domain
        self.universe = universe
        self.budget = budget
        self.bound = bound
        self.frozen = frozen
        self.observed = observed
        self.record_trail = record_trail
        self.cycle_check = cycle_check
        self.script = script

        self.expansions = 0
        self.node_count = 0
        self.truncated = False
        self.reason: Optional[str] = None
        self.start = time.monotonic()
        self.trail: list[ChoicePoint] = []
        self._seen_keys: set = set()
        self._depth: dict[int, int] = {}
        self.root = TreeNode(ROOT, None, [], True)

    # -- bookkeeping ---------------------------------------------------------

    def _tick(self) -> None:
        if time.monotonic() - self.start > self.budget.wall_secs:
            raise BudgetExceeded("wall-clock")

    def _mark_truncated(self, why: str) -> None:
        self.truncated = True
        if self.reason is None:
            self.reason = why

    # -- candidate generation --------------------------------------------------

    def _method_candidates(self, task: GroundTask, state: State) -> list[GroundMethod]:
        out: list[GroundMethod] = []
        for schema in self.domain.methods_for(task.name):
            if len(schema.task[1]) != len(task.args):
                continue
            binding: dict[str, str] = {}
            ok = True
            for term, actual in zip(schema.task[1], task.args):
                if is_var(term):
                    if binding.setdefault(term, actual) != actual:
                        ok = False
                        break
                elif term != actual:
                    ok = False
                    break
            if not ok:
                continue
            free = [(v, t) for v, t in schema.params if v not in binding]
            pools = [self.universe.objects_of(t) for _, t in free]
            for combo in itertools.product(*pools):
                b = dict(binding)
                b.update({v: c for (v, _), c in zip(free, combo)})
                gm = ground_method(schema, b)
                if eval_formula(gm.precondition, state, self.universe):
                    out.append(gm)
        return out

    def _action_candidates(self, task: GroundTask) -> list[GroundAction]:
        out = list(self.domain.ground_actions.get((task.name, task.args), ()))
        for schema in self.domain.action_variants(task.name):
            if len(schema.params) != len(task.args):
                continue
            out.append(ground_action(schema, task.args))
        return out

    # -- search -------------------------------------------------------------

    def stream(self, state: State, tasks: tuple[GroundTask, ...]) -> Iterator[DecompositionTree]:
        """Yield a snapshot of every solution tree in deterministic order."""
        children = []
        for i, t in enumerate(tasks):
            kind = ACTION if self.domain.is_primitive(t.name) else TASK
            node = TreeNode(kind, t, [], i == 0)
            self._depth[id(node)] = 1
            children.append(node)
        self.root.children = children
        self.node_count = 1 + len(children)
        start_state = state
        if not self.frozen and self.observed is not None:
            start_state = self.observed
        self.root.input_state = start_state
        yield from self._step(tuple(children), start_state, 0, frozenset(), self.script)

    def _step(
        self,
        agenda: tuple[TreeNode, ...],
        state: State,
        emitted: int,
        visited: frozenset,
        script: tuple[tuple[str, tuple[str, ...]], ...],
    ) -> Iterator[DecompositionTree]:
        self._tick()
        if not agenda:
            if emitted < len(self.frozen):
                return  # executed prefix not fully replayed
            tree = DecompositionTree(_deep_copy(self.root))
            key = tree.canonical_key()
            if key not in self._seen_keys:
                self._seen_keys.add(key)
                yield tree
            return
        head, rest = agenda[0], agenda[1:]

        if head.kind == ACTION:
            yield from self._emit(head, rest, state, emitted, visited, script)
            return

        task: GroundTask = head.label  # type: ignore[assignment]
        key = (task, state)
        if self.cycle_check and key in visited:
            return
        self.expansions += 1
        if self.expansions > self.budget.max_expansions:
            raise BudgetExceeded("expansions")
        depth = self._depth[id(head)]
        limit = self.budget.max_depth if self.bound is None else min(self.budget.max_depth, self.bound.max_depth)
        if depth + 2 > limit:
            self._mark_truncated("bound-depth")
            return

        cands = self._method_candidates(task, state)
        order: list[tuple[GroundMethod, tuple]] = []
        if script:
            wanted = script[0]
            hit = next((c for c in cands if (c.name, c.args) == wanted), None)
            if hit is not None:
                order.append((hit, script[1:]))
            # deviating from the replayed decisions abandons the rest of them
            order.extend((c, ()) for c in cands if hit is None or c is not hit)
        else:
            order = [(c, ()) for c in cands]

        head.input_state = state
        cp_index = len(self.trail)
        if self.record_trail:
            self.trail.append(
                ChoicePoint(
                    task,
                    self._path_of(head),
                    state,
                    emitted,
                    tuple((c.name, c.args) for c in cands),
                    -1,
                )
            )

        for gm, next_script in order:
            mnode = TreeNode(METHOD, gm, [], True)
            subtasks = gm.subtasks or (GroundTask(DUMMY_NAME, ()),)
            kids = []
            for i, st in enumerate(subtasks):
                kind = ACTION if self.domain.is_primitive(st.name) else TASK
                node = TreeNode(kind, st, [], i == 0)
                self._depth[id(node)] = depth + 2
                kids.append(node)
            mnode.children = kids
            mnode.input_state = state
            head.children = [mnode]
            added = 1 + len(kids)
            self.node_count += added
            if self.bound is not None and self.node_count > self.bound.max_nodes:
                self.node_count -= added
                head.children = []
                self._mark_truncated("bound-nodes")
                continue
            if self.record_trail:
                self.trail[cp_index].chosen = next(i for i, c in enumerate(cands) if c is gm)
            yield from self._step(tuple(kids) + rest, state, emitted, visited | {key}, next_script)
            self.node_count -= added
            head.children = []
        if self.record_trail:
            del self.trail[cp_index:]
        return

    def _emit(
        self,
        head: TreeNode,
        rest: tuple[TreeNode, ...],
        state: State,
        emitted: int,
        visited: frozenset,
        script: tuple,
    ) -> Iterator[DecompositionTree]:
        label = head.label
        task: GroundTask = label if isinstance(label, GroundTask) else label.task  # type: ignore[union-attr]
        for ga in self._action_candidates(task):
            if emitted < len(self.frozen):
                want = self.frozen[emitted]
                if (ga.name, ga.args) != (want.name, want.args):
                    continue
                # the prefix already happened: replay effects, skip the gate
                next_state = apply_unchecked(state, want, self.universe)
                if emitted + 1 == len(self.frozen) and self.observed is not None:
                    next_state = self.observed
                ga = want
            else:
                if not eval_formula(ga.precondition, state, self.universe):
                    continue
                next_state = apply_unchecked(state, ga, self.universe)
            head.label = ga
            head.input_state = state
            yield from self._step(rest, next_state, emitted + 1, visited, script)
            head.label = label
            if emitted < len(self.frozen):
                break  # only one way to match a frozen position
        return

    def _path_of(self, node: TreeNode) -> tuple[int, ...]:
        path: list[int] = []

        def walk(cur: TreeNode, target: TreeNode) -> bool:
            if cur is target:
                return True
            for i, c in enumerate(cur.children):
                path.append(i)
                if walk(c, target):
                    return True
                path.pop()
            return False

        walk(self.root, node)
        return tuple(path)


def _make_universe(domain: Domain, universe: Optional[Universe]) -> Universe:
    return universe or Universe(domain.types, dict(domain.constants), domain.predicates)


def iter_solutions(
    domain: Domain,
    state: State,
    tasks: tuple[GroundTask, ...],
    budget: Optional[SearchBudget] = None,
    universe: Optional[Universe] = None,
    *,
    bound: Optional[Bound] = None,
    cycle_check: bool = True,
) -> Iterator[DecompositionTree]:
    """Lazy deterministic stream of solution trees.

    Raises BudgetExceeded if a resource limit trips mid-stream; bound
    truncation ends the stream silently (use solve_all for the flag).
    """
    budget = budget or SearchBudget()
    eng = _Engine(
        domain,
        _make_universe(domain, universe),
        budget,
        bound=bound,
        cycle_check=cycle_check,
    )
    yield from eng.stream(state, tasks)


def solve(
    domain: Domain,
    state: State,
    tasks: tuple[GroundTask, ...],
    budget: Optional[SearchBudget] = None,
    universe: Optional[Universe] = None,
    *,
    bound: Optional[Bound] = None,
    frozen: tuple[GroundAction, ...] = (),
    observed: Optional[State] = None,
    script: tuple = (),
    record_trail: bool = False,
    cycle_check: bool = True,
) -> PlanResult:
    """Find the first solution tree, or prove bounded unsolvability.

    The returned tree is applicable in ``state``; repeated calls with
    equal inputs return byte-identical canonical trees.  A timeout is
    always distinguished from proven unsolvability.
    """
    budget = budget or SearchBudget()
    eng = _Engine(
        domain,
        _make_universe(domain, universe),
        budget,
        bound=bound,
        frozen=frozen,
        observed=observed,
        script=script,
        record_trail=record_trail,
        cycle_check=cycle_check,
    )
    try:
        for tree in eng.stream(state, tasks):
            return PlanResult(SOLVED, tree, eng.expansions, None, list(eng.trail) if record_trail else None)
    except BudgetExceeded as stop:
        return PlanResult(TIMEOUT, None, eng.expansions, stop.reason, None)
    if eng.truncated:
        return PlanResult(TIMEOUT, None, eng.expansions, eng.reason, None)
    return PlanResult(UNSOLVABLE, None, eng.expansions, None, None)


def solve_all(
    domain: Domain,
    state: State,
    tasks: tuple[GroundTask, ...],
    bound: Bound,
    budget: Optional[SearchBudget] = None,
    universe: Optional[Universe] = None,
) -> EnumerationResult:
    """All solution trees within the bound, duplicate-free, in search order.

    ``exhausted`` is False when any branch was cut by the bound or
    budget, in which case the list may be incomplete.
    """
    budget = budget or SearchBudget()
    eng = _Engine(domain, _make_universe(domain, universe), budget, bound=bound, cycle_check=False)
    trees: list[DecompositionTree] = []
    try:
        for tree in eng.stream(state, tasks):
            trees.append(tree)
    except BudgetExceeded as stop:
        return EnumerationResult(trees, False, stop.reason, eng.expansions)
    return EnumerationResult(trees, not eng.truncated, eng.reason, eng.expansions)


def resume_from(
    domain: Domain,
    state: State,
    tasks: tuple[GroundTask, ...],
    trail: list[ChoicePoint],
    jump_target: TreeNode | tuple[int, ...],
    new_state: State,
    frozen_prefix: tuple[GroundAction, ...],
    budget: Optional[SearchBudget] = None,
    universe: Optional[Universe] = None,
    *,
    source_tree: Optional[DecompositionTree] = None,
) -> PlanResult:
    """Backjump into a recorded search and continue under a new state.

    Decisions chronologically before the jump target are replayed first
    (they remain backtrackable if the continuation fails); the target's
    decomposition is retried from scratch; the executed action prefix
    is matched verbatim and never re-opened, with ``new_state``
    substituted once the prefix is fully replayed.
    """
    if isinstance(jump_target, TreeNode):
        if source_tree is None:
            raise StructuralError("resume_from needs source_tree to resolve a node target")
        path = _node_path(source_tree, jump_target)
    else:
        path = tuple(jump_target)
    index = next((i for i, cp in enumerate(trail) if cp.path == path), None)
    if index is None:
        raise StructuralError("jump target has no choice point in the trail")
    script = tuple(
        trail[i].candidates[trail[i].chosen] for i in range(index) if trail[i].chosen >= 0
    )
    return solve(
        domain,
        state,
        tasks,
        budget,
        universe,
        frozen=frozen_prefix,
        observed=new_state,
        script=script,
    )


def _node_path(tree: DecompositionTree, node: TreeNode) -> tuple[int, ...]:
    path = tree.path_to(node)
    out = []
    for parent, child in zip(path, path[1:]):
        out.append(next(i for i, c in enumerate(parent.children) if c is child))
    return tuple(out)
