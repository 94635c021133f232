"""Planning-domain model: states, formulas, effects, actions, methods.

States are sets of ground atoms.  Preconditions are first-order formulas
over a finite typed object universe (conjunction, literal negation, and
typed forall/exists; no disjunction).  Effects are lists of conditional,
possibly forall-quantified add/delete branches; within one application
all deletes land before all adds (add wins on conflict).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional

from .errors import DomainValidationError, PreconditionError

# Reserved action name used as the single child of methods with no subtasks.
# The parser refuses user actions with this name.
DUMMY_NAME = "%dummy"

Binding = dict[str, str]


def is_var(term: str) -> bool:
    return term.startswith("?")


@dataclass(frozen=True, order=True)
class GroundAtom:
    """A predicate applied to constant arguments."""

    predicate: str
    args: tuple[str, ...] = ()

    def __str__(self) -> str:
        if not self.args:
            return f"({self.predicate})"
        return f"({self.predicate} {' '.join(self.args)})"


class State:
    """An immutable set of ground atoms with a canonical serial order."""

    __slots__ = ("atoms", "_hash")

    def __init__(self, atoms: Iterable[GroundAtom] = ()):
        self.atoms: frozenset[GroundAtom] = frozenset(atoms)
        self._hash = hash(self.atoms)

    def __contains__(self, atom: GroundAtom) -> bool:
        return atom in self.atoms

    def __eq__(self, other: object) -> bool:
        return isinstance(other, State) and self.atoms == other.atoms

    def __hash__(self) -> int:
        return self._hash

    def __len__(self) -> int:
        return len(self.atoms)

    def __iter__(self) -> Iterator[GroundAtom]:
        return iter(self.canonical())

    def canonical(self) -> tuple[GroundAtom, ...]:
        """Atoms in lexicographic order; equal states serialize identically."""
        return tuple(sorted(self.atoms))

    def updated(self, deletes: Iterable[GroundAtom], adds: Iterable[GroundAtom]) -> "State":
        return State((self.atoms - frozenset(deletes)) | frozenset(adds))

    def __repr__(self) -> str:
        return "{" + ", ".join(str(a) for a in self.canonical()) + "}"


# ---------------------------------------------------------------------------
# Formulas
# ---------------------------------------------------------------------------


class Formula:
    """Base class for precondition formulas."""

    __slots__ = ()


@dataclass(frozen=True)
class Truth(Formula):
    """The empty conjunction."""

    def __str__(self) -> str:
        return "()"


TRUTH = Truth()


@dataclass(frozen=True)
class Literal(Formula):
    """A possibly-negated atom; args may contain variables."""

    predicate: str
    args: tuple[str, ...] = ()
    positive: bool = True

    def __str__(self) -> str:
        inner = f"({self.predicate}{''.join(' ' + a for a in self.args)})"
        return inner if self.positive else f"(not {inner})"


@dataclass(frozen=True)
class And(Formula):
    parts: tuple[Formula, ...]

    def __str__(self) -> str:
        return "(and " + " ".join(str(p) for p in self.parts) + ")"


@dataclass(frozen=True)
class Quantified(Formula):
    """forall/exists over a typed variable."""

    kind: str  # "forall" | "exists"
    var: str
    var_type: str
    body: Formula

    def __str__(self) -> str:
        return f"({self.kind} ({self.var} - {self.var_type}) {self.body})"


def conjoin(*parts: Formula) -> Formula:
    """Flatten a conjunction, dropping truth constants."""
    flat: list[Formula] = []
    for p in parts:
        if isinstance(p, Truth):
            continue
        if isinstance(p, And):
            flat.extend(p.parts)
        else:
            flat.append(p)
    if not flat:
        return TRUTH
    if len(flat) == 1:
        return flat[0]
    return And(tuple(flat))


def substitute(formula: Formula, binding: Binding) -> Formula:
    """Replace bound variables with constants."""
    if isinstance(formula, Truth):
        return formula
    if isinstance(formula, Literal):
        return Literal(
            formula.predicate,
            tuple(binding.get(a, a) for a in formula.args),
            formula.positive,
        )
    if isinstance(formula, And):
        return And(tuple(substitute(p, binding) for p in formula.parts))
    if isinstance(formula, Quantified):
        inner = {k: v for k, v in binding.items() if k != formula.var}
        return Quantified(formula.kind, formula.var, formula.var_type, substitute(formula.body, inner))
    raise TypeError(f"unknown formula node {formula!r}")


def free_vars(formula: Formula) -> set[str]:
    if isinstance(formula, Truth):
        return set()
    if isinstance(formula, Literal):
        return {a for a in formula.args if is_var(a)}
    if isinstance(formula, And):
        out: set[str] = set()
        for p in formula.parts:
            out |= free_vars(p)
        return out
    if isinstance(formula, Quantified):
        return free_vars(formula.body) - {formula.var}
    raise TypeError(f"unknown formula node {formula!r}")


# ---------------------------------------------------------------------------
# Universe and evaluation
# ---------------------------------------------------------------------------


class Universe:
    """Typed finite object universe against which formulas are evaluated."""

    def __init__(
        self,
        types: dict[str, Optional[str]],
        objects: dict[str, str],
        predicates: Optional[dict[str, tuple[str, ...]]] = None,
    ):
        self.types = dict(types)
        self.objects = dict(objects)
        self.predicates = dict(predicates) if predicates is not None else None
        self._of_type: dict[str, tuple[str, ...]] = {}

    def is_subtype(self, sub: str, sup: str) -> bool:
        if sup == "object":
            return True
        cur: Optional[str] = sub
        while cur is not None:
            if cur == sup:
                return True
            cur = self.types.get(cur)
        return False

    def objects_of(self, type_name: str) -> tuple[str, ...]:
        if type_name not in self._of_type:
            if type_name != "object" and type_name not in self.types:
                raise DomainValidationError(f"unknown type {type_name!r}")
            self._of_type[type_name] = tuple(
                sorted(o for o, t in self.objects.items() if self.is_subtype(t, type_name))
            )
        return self._of_type[type_name]

    def check_literal(self, lit: Literal) -> None:
        if self.predicates is not None and lit.predicate not in self.predicates:
            raise DomainValidationError(f"unknown predicate {lit.predicate!r}")
        for a in lit.args:
            if not is_var(a) and a not in self.objects:
                raise DomainValidationError(f"unknown object {a!r}")


def eval_formula(formula: Formula, state: State, universe: Universe, binding: Optional[Binding] = None) -> bool:
    """Standard FOL satisfaction over the finite universe.

    The formula must be closed once ``binding`` is applied; quantifiers
    range over the objects of the variable's declared type.
    """
    b = binding or {}
    if isinstance(formula, Truth):
        return True
    if isinstance(formula, Literal):
        args = tuple(b.get(a, a) for a in formula.args)
        for a in args:
            if is_var(a):
                raise DomainValidationError(f"unbound variable {a!r} in {formula}")
        universe.check_literal(Literal(formula.predicate, args, formula.positive))
        holds = GroundAtom(formula.predicate, args) in state
        return holds if formula.positive else not holds
    if isinstance(formula, And):
        return all(eval_formula(p, state, universe, b) for p in formula.parts)
    if isinstance(formula, Quantified):
        domain_objs = universe.objects_of(formula.var_type)
        if formula.kind == "forall":
            return all(
                eval_formula(formula.body, state, universe, {**b, formula.var: o}) for o in domain_objs
            )
        return any(
            eval_formula(formula.body, state, universe, {**b, formula.var: o}) for o in domain_objs
        )
    raise TypeError(f"unknown formula node {formula!r}")


def first_falsified(
    formula: Formula, state: State, universe: Universe, binding: Optional[Binding] = None
) -> Optional[str]:
    """Return a printable description of the first falsified literal, or None."""
    b = binding or {}
    if isinstance(formula, Truth):
        return None
    if isinstance(formula, Literal):
        if eval_formula(formula, state, universe, b):
            return None
        return str(substitute(formula, b))
    if isinstance(formula, And):
        for p in formula.parts:
            bad = first_falsified(p, state, universe, b)
            if bad is not None:
                return bad
        return None
    if isinstance(formula, Quantified):
        objs = universe.objects_of(formula.var_type)
        if formula.kind == "forall":
            for o in objs:
                bad = first_falsified(formula.body, state, universe, {**b, formula.var: o})
                if bad is not None:
                    return bad
            return None
        if eval_formula(formula, state, universe, b):
            return None
        return str(substitute(formula, b))
    raise TypeError(f"unknown formula node {formula!r}")


def consumed_atoms(
    formula: Formula, state: State, universe: Universe, binding: Optional[Binding] = None
) -> set[GroundAtom]:
    """Positive ground atoms a satisfied formula relies on.

    Used by causal-link construction: negated literals consume nothing,
    foralls contribute every instantiation, an exists contributes its
    first satisfying witness (deterministic under sorted object order).
    """
    b = binding or {}
    if isinstance(formula, Truth):
        return set()
    if isinstance(formula, Literal):
        if not formula.positive:
            return set()
        args = tuple(b.get(a, a) for a in formula.args)
        atom = GroundAtom(formula.predicate, args)
        return {atom} if atom in state else set()
    if isinstance(formula, And):
        out: set[GroundAtom] = set()
        for p in formula.parts:
            out |= consumed_atoms(p, state, universe, b)
        return out
    if isinstance(formula, Quantified):
        objs = universe.objects_of(formula.var_type)
        if formula.kind == "forall":
            out = set()
            for o in objs:
                out |= consumed_atoms(formula.body, state, universe, {**b, formula.var: o})
            return out
        for o in objs:
            if eval_formula(formula.body, state, universe, {**b, formula.var: o}):
                return consumed_atoms(formula.body, state, universe, {**b, formula.var: o})
        return set()
    raise TypeError(f"unknown formula node {formula!r}")


# ---------------------------------------------------------------------------
# Effects
# ---------------------------------------------------------------------------

AtomTemplate = tuple[str, tuple[str, ...]]


@dataclass(frozen=True)
class EffectBranch:
    """One conditional effect branch, optionally forall-quantified."""

    adds: tuple[AtomTemplate, ...] = ()
    deletes: tuple[AtomTemplate, ...] = ()
    condition: Formula = TRUTH
    params: tuple[tuple[str, str], ...] = ()  # forall variables (name, type)


@dataclass(frozen=True)
class Effect:
    branches: tuple[EffectBranch, ...] = ()

    def is_empty(self) -> bool:
        return all(not b.adds and not b.deletes for b in self.branches)


def _ground_template(t: AtomTemplate, binding: Binding) -> GroundAtom:
    pred, args = t
    out = tuple(binding.get(a, a) for a in args)
    for a in out:
        if is_var(a):
            raise DomainValidationError(f"unbound variable {a!r} in effect atom ({pred} ...)")
    return GroundAtom(pred, out)


def effect_delta(
    effect: Effect, state: State, universe: Universe, binding: Optional[Binding] = None
) -> tuple[set[GroundAtom], set[GroundAtom]]:
    """Deletes and adds produced by an effect in ``state``.

    Branch conditions are evaluated against the single pre-transition
    state, so branches never see each other's results.
    """
    b = binding or {}
    deletes: set[GroundAtom] = set()
    adds: set[GroundAtom] = set()
    for branch in effect.branches:
        var_names = [v for v, _ in branch.params]
        var_domains = [universe.objects_of(t) for _, t in branch.params]
        for combo in itertools.product(*var_domains):
            bb = {**b, **dict(zip(var_names, combo))}
            if not eval_formula(branch.condition, state, universe, bb):
                continue
            deletes.update(_ground_template(t, bb) for t in branch.deletes)
            adds.update(_ground_template(t, bb) for t in branch.adds)
    return deletes, adds


# ---------------------------------------------------------------------------
# Tasks, actions, methods, domain, problem
# ---------------------------------------------------------------------------


@dataclass(frozen=True, order=True)
class GroundTask:
    """A ground task instance; may name an action or a compound task."""

    name: str
    args: tuple[str, ...] = ()

    def __str__(self) -> str:
        if not self.args:
            return f"({self.name})"
        return f"({self.name} {' '.join(self.args)})"


@dataclass(frozen=True)
class ActionSchema:
    name: str
    params: tuple[tuple[str, str], ...] = ()  # (variable, type)
    precondition: Formula = TRUTH
    effect: Effect = Effect()
    cost: float = 1.0
    variant: Optional[str] = None  # set on rewritten prefix copies


@dataclass(frozen=True)
class GroundAction:
    name: str
    args: tuple[str, ...] = ()
    precondition: Formula = TRUTH
    effect: Effect = Effect()
    cost: float = 1.0
    variant: Optional[str] = None

    @property
    def task(self) -> GroundTask:
        return GroundTask(self.name, self.args)

    def is_dummy(self) -> bool:
        return self.name == DUMMY_NAME

    def __str__(self) -> str:
        body = self.name if not self.args else f"{self.name} {' '.join(self.args)}"
        return f"({body})" if self.variant is None else f"({body})@{self.variant}"


DUMMY_ACTION = GroundAction(DUMMY_NAME, (), TRUTH, Effect(), 0.0)


@dataclass(frozen=True)
class MethodSchema:
    name: str
    task: tuple[str, tuple[str, ...]]  # task name + parameter terms
    params: tuple[tuple[str, str], ...] = ()
    precondition: Formula = TRUTH
    subtasks: tuple[tuple[str, tuple[str, ...]], ...] = ()  # totally ordered


@dataclass(frozen=True)
class GroundMethod:
    name: str
    args: tuple[str, ...] = ()
    task: GroundTask = GroundTask("", ())
    precondition: Formula = TRUTH
    subtasks: tuple[GroundTask, ...] = ()

    def __str__(self) -> str:
        body = self.name if not self.args else f"{self.name} {' '.join(self.args)}"
        return f"({body})"


def ground_action(schema: ActionSchema, args: tuple[str, ...]) -> GroundAction:
    if len(args) != len(schema.params):
        raise DomainValidationError(f"action {schema.name} expects {len(schema.params)} args, got {len(args)}")
    binding = {v: a for (v, _), a in zip(schema.params, args)}
    pre = substitute(schema.precondition, binding)
    branches = []
    for br in schema.effect.branches:
        inner = {k: v for k, v in binding.items() if k not in {p for p, _ in br.params}}
        branches.append(
            EffectBranch(
                adds=tuple((p, tuple(inner.get(a, a) for a in pa)) for p, pa in br.adds),
                deletes=tuple((p, tuple(inner.get(a, a) for a in pa)) for p, pa in br.deletes),
                condition=substitute(br.condition, inner),
                params=br.params,
            )
        )
    return GroundAction(schema.name, args, pre, Effect(tuple(branches)), schema.cost, schema.variant)


def ground_method(schema: MethodSchema, binding: Binding) -> GroundMethod:
    args = tuple(binding[v] for v, _ in schema.params)
    tname, targs = schema.task
    task = GroundTask(tname, tuple(binding.get(a, a) for a in targs))
    subtasks = tuple(GroundTask(n, tuple(binding.get(a, a) for a in sa)) for n, sa in schema.subtasks)
    return GroundMethod(schema.name, args, task, substitute(schema.precondition, binding), subtasks)


@dataclass
class Domain:
    """An HTN planning domain: a classical domain plus decomposition methods.

    ``actions`` maps an action name to its schema variants; user domains
    always hold a single variant, rewritten repair domains add
    position-tracking copies under the same name.  ``methods`` preserves
    source order, which is the planner's tie-breaking order.
    """

    name: str = "domain"
    types: dict[str, Optional[str]] = field(default_factory=dict)
    predicates: dict[str, tuple[str, ...]] = field(default_factory=dict)
    constants: dict[str, str] = field(default_factory=dict)
    actions: dict[str, tuple[ActionSchema, ...]] = field(default_factory=dict)
    methods: tuple[MethodSchema, ...] = ()
    tasks: dict[str, tuple[str, ...]] = field(default_factory=dict)
    requirements: tuple[str, ...] = ()
    # position-pinned ground resolutions added by the rewrite compilation;
    # tried before the schema-grounded action when resolving a primitive task
    ground_actions: dict[tuple[str, tuple[str, ...]], tuple[GroundAction, ...]] = field(default_factory=dict)

    def methods_for(self, task_name: str) -> tuple[MethodSchema, ...]:
        return tuple(m for m in self.methods if m.task[0] == task_name)

    def is_primitive(self, name: str) -> bool:
        return name in self.actions or name == DUMMY_NAME

    def action_variants(self, name: str) -> tuple[ActionSchema, ...]:
        if name in self.actions:
            return self.actions[name]
        if name == DUMMY_NAME:
            return (ActionSchema(DUMMY_NAME, (), TRUTH, Effect(), 0.0),)
        raise DomainValidationError(f"unknown action {name!r}")

    def validate(self) -> None:
        for m in self.methods:
            if m.task[0] not in self.tasks:
                raise DomainValidationError(f"method {m.name} decomposes undeclared task {m.task[0]!r}")
            for sub, _ in m.subtasks:
                if sub not in self.tasks and not self.is_primitive(sub):
                    raise DomainValidationError(f"method {m.name} references unknown subtask {sub!r}")


@dataclass
class Problem:
    name: str
    domain_name: str
    objects: dict[str, str] = field(default_factory=dict)
    init: State = field(default_factory=State)
    tasks: tuple[GroundTask, ...] = ()


def make_universe(domain: Domain, problem: Problem) -> Universe:
    objects = dict(domain.constants)
    objects.update(problem.objects)
    return Universe(domain.types, objects, domain.predicates)


# ---------------------------------------------------------------------------
# Transitions
# ---------------------------------------------------------------------------


def applicable(state: State, action: GroundAction, universe: Universe) -> bool:
    return eval_formula(action.precondition, state, universe)


def apply_action(state: State, action: GroundAction, universe: Universe) -> State:
    """The state produced by an applicable action (gamma)."""
    bad = first_falsified(action.precondition, state, universe)
    if bad is not None:
        raise PreconditionError(str(action), bad)
    deletes, adds = effect_delta(action.effect, state, universe)
    return state.updated(deletes, adds)


def apply_unchecked(state: State, action: GroundAction, universe: Universe) -> State:
    """Apply effects without the precondition gate (prefix replay)."""
    deletes, adds = effect_delta(action.effect, state, universe)
    return state.updated(deletes, adds)


@dataclass(frozen=True)
class PlanFailure:
    """First inapplicable action while folding a plan."""

    index: int  # 0-based position of the failing action
    action: GroundAction
    state: State  # state the failing action would run in
    falsified: str


def apply_plan(
    state: State, plan: Iterable[GroundAction], universe: Universe
) -> tuple[State, Optional[PlanFailure]]:
    """Fold apply left-to-right; stop at the first inapplicable action."""
    s = state
    for i, a in enumerate(plan):
        bad = first_falsified(a.precondition, s, universe)
        if bad is not None:
            return s, PlanFailure(i, a, s, bad)
        s = apply_unchecked(s, a, universe)
    return s, None
