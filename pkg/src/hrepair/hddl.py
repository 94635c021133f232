"""HDDL-subset reader and writer.

Supported fragment: typed STRIPS with negative, universally and
existentially quantified preconditions, conditional and forall
effects, ``:htn`` problems with totally ordered subtasks, and method
preconditions.  Anything else (unordered subtasks, disjunction,
goals alongside task networks, durative constructs) is rejected with
an ``unsupported-construct`` error rather than silently ignored.

Disturbance files reuse the same lexer: a disturbance is a guarded
state change modeled like an action, with a placement directive
saying after which plan step it strikes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from .errors import ParseError, SourceSpan
from .model import (
    DUMMY_NAME,
    TRUTH,
    ActionSchema,
    And,
    Domain,
    Effect,
    EffectBranch,
    Formula,
    GroundAtom,
    GroundTask,
    Literal,
    MethodSchema,
    Problem,
    Quantified,
    State,
    is_var,
)

SUPPORTED_REQUIREMENTS = {
    ":strips",
    ":typing",
    ":negative-preconditions",
    ":universal-preconditions",
    ":existential-preconditions",
    ":quantified-preconditions",
    ":conditional-effects",
    ":method-preconditions",
    ":hierarchy",
    ":htn",
    ":equality",  # tolerated in requirement lists; '=' itself is rejected on use
}

RANDOM_PLACEMENT = "random"


@dataclass(frozen=True)
class DisturbanceSpec:
    """A precondition-guarded exogenous state change."""

    name: str
    precondition: Formula = TRUTH
    effect: Effect = Effect()
    placement: Union[int, str] = RANDOM_PLACEMENT  # 1-based action index, or "random"


# ---------------------------------------------------------------------------
# S-expressions
# ---------------------------------------------------------------------------


@dataclass
class SExpr:
    """Either an atom (value set) or a list (items set)."""

    span: SourceSpan
    value: Optional[str] = None
    items: Optional[list["SExpr"]] = None

    @property
    def is_atom(self) -> bool:
        return self.value is not None


def _tokenize(text: str, filename: str) -> list[tuple[str, SourceSpan]]:
    tokens: list[tuple[str, SourceSpan]] = []
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch == ";":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            col += 1
            i += 1
            continue
        if ch in "()":
            tokens.append((ch, SourceSpan(filename, line, col, 1)))
            col += 1
            i += 1
            continue
        start_col = col
        j = i
        while j < n and text[j] not in " \t\r\n();":
            j += 1
        word = text[i:j]
        tokens.append((word, SourceSpan(filename, line, start_col, len(word))))
        col += j - i
        i = j
    return tokens


def _read_sexprs(text: str, filename: str) -> list[SExpr]:
    tokens = _tokenize(text, filename)
    out: list[SExpr] = []
    stack: list[SExpr] = []
    for tok, span in tokens:
        if tok == "(":
            node = SExpr(span, items=[])
            if stack:
                stack[-1].items.append(node)  # type: ignore[union-attr]
            else:
                out.append(node)
            stack.append(node)
        elif tok == ")":
            if not stack:
                raise ParseError("lexical", "unbalanced ')'", span)
            stack.pop()
        else:
            node = SExpr(span, value=tok.lower())
            if stack:
                stack[-1].items.append(node)  # type: ignore[union-attr]
            else:
                raise ParseError("lexical", f"stray token {tok!r} outside any form", span)
    if stack:
        raise ParseError("lexical", "unbalanced '('", stack[-1].span)
    return out


def _expect_list(node: SExpr, what: str) -> list[SExpr]:
    if node.items is None:
        raise ParseError("malformed", f"expected {what}, got atom {node.value!r}", node.span)
    return node.items


def _expect_atom(node: SExpr, what: str) -> str:
    if node.value is None:
        raise ParseError("malformed", f"expected {what}, got a list", node.span)
    return node.value


def _parse_typed_list(items: list[SExpr], default_type: str = "object") -> list[tuple[str, str, SourceSpan]]:
    """Parse ``a b - t c d`` into [(name, type, span), ...]."""
    out: list[tuple[str, str, SourceSpan]] = []
    pending: list[tuple[str, SourceSpan]] = []
    i = 0
    while i < len(items):
        word = _expect_atom(items[i], "a name in a typed list")
        if word == "-":
            if i + 1 >= len(items):
                raise ParseError("malformed", "dangling '-' in typed list", items[i].span)
            type_name = _expect_atom(items[i + 1], "a type name")
            out.extend((n, type_name, sp) for n, sp in pending)
            pending = []
            i += 2
        else:
            pending.append((word, items[i].span))
            i += 1
    out.extend((n, default_type, sp) for n, sp in pending)
    return out


# ---------------------------------------------------------------------------
# Formula / effect parsing
# ---------------------------------------------------------------------------


class _Context:
    """Declared symbols available while parsing one file."""

    def __init__(self, domain: Optional[Domain] = None):
        self.domain = domain
        self.predicates: dict[str, int] = (
            {p: len(ts) for p, ts in domain.predicates.items()} if domain else {}
        )
        self.types: set[str] = set(domain.types) | {"object"} if domain else {"object"}

    def check_atom(self, name: str, arity: int, span: SourceSpan) -> None:
        if name not in self.predicates:
            raise ParseError("undeclared-symbol", f"undeclared predicate {name!r}", span)
        if self.predicates[name] != arity:
            raise ParseError(
                "arity",
                f"predicate {name!r} expects {self.predicates[name]} args, got {arity}",
                span,
            )

    def check_type(self, name: str, span: SourceSpan) -> None:
        if name not in self.types:
            raise ParseError("undeclared-symbol", f"undeclared type {name!r}", span)


def _parse_formula(node: SExpr, ctx: _Context, scope: set[str]) -> Formula:
    items = _expect_list(node, "a formula")
    if not items:
        return TRUTH
    head = items[0]
    if head.is_atom and head.value == "and":
        parts = tuple(_parse_formula(x, ctx, scope) for x in items[1:])
        return And(parts) if parts else TRUTH
    if head.is_atom and head.value == "not":
        if len(items) != 2:
            raise ParseError("malformed", "(not ...) takes one argument", node.span)
        inner = _parse_formula(items[1], ctx, scope)
        if not isinstance(inner, Literal) or not inner.positive:
            raise ParseError("unsupported-construct", "negation is only supported on atoms", node.span)
        return Literal(inner.predicate, inner.args, positive=False)
    if head.is_atom and head.value in ("forall", "exists"):
        if len(items) != 3:
            raise ParseError("malformed", f"({head.value} (vars) body) expected", node.span)
        typed = _parse_typed_list(_expect_list(items[1], "a variable list"))
        body_scope = set(scope)
        for v, t, sp in typed:
            if not is_var(v):
                raise ParseError("malformed", f"quantified name {v!r} must be a ?variable", sp)
            ctx.check_type(t, sp)
            body_scope.add(v)
        body = _parse_formula(items[2], ctx, body_scope)
        for v, t, _ in reversed(typed):
            body = Quantified(head.value, v, t, body)
        return body
    if head.is_atom and head.value in ("or", "imply", "when", "="):
        raise ParseError("unsupported-construct", f"{head.value!r} is outside the supported fragment", node.span)
    # plain atom
    name = _expect_atom(head, "a predicate name")
    args = tuple(_expect_atom(x, "an argument") for x in items[1:])
    ctx.check_atom(name, len(args), node.span)
    for x in items[1:]:
        term = x.value or ""
        if is_var(term) and term not in scope:
            raise ParseError("undeclared-symbol", f"free variable {term!r}", x.span)
    return Literal(name, args, True)


def _assemble_effect(node: SExpr, ctx: _Context, scope: set[str]) -> Effect:
    collected: list[tuple[tuple[tuple[str, str], ...], Formula, list, list]] = []

    def slot(params: tuple[tuple[str, str], ...], cond: Formula) -> tuple[list, list]:
        for p, c, adds, dels in collected:
            if p == params and c == cond:
                return adds, dels
        adds: list = []
        dels: list = []
        collected.append((params, cond, adds, dels))
        return adds, dels

    def walk(n: SExpr, params: tuple[tuple[str, str], ...], cond: Formula, sc: set[str]) -> None:
        items = _expect_list(n, "an effect")
        if not items:
            return
        head = items[0]
        if head.is_atom and head.value == "and":
            for x in items[1:]:
                walk(x, params, cond, sc)
            return
        if head.is_atom and head.value == "forall":
            if len(items) != 3:
                raise ParseError("malformed", "(forall (vars) effect) expected", n.span)
            typed = _parse_typed_list(_expect_list(items[1], "a variable list"))
            new_scope = set(sc)
            for v, t, sp in typed:
                ctx.check_type(t, sp)
                new_scope.add(v)
            walk(items[2], params + tuple((v, t) for v, t, _ in typed), cond, new_scope)
            return
        if head.is_atom and head.value == "when":
            if len(items) != 3:
                raise ParseError("malformed", "(when condition effect) expected", n.span)
            extra = _parse_formula(items[1], ctx, sc)
            combined = extra if cond == TRUTH else And((cond, extra))
            walk(items[2], params, combined, sc)
            return
        if head.is_atom and head.value == "not":
            if len(items) != 2:
                raise ParseError("malformed", "(not (atom)) expected in effect", n.span)
            lit = _parse_formula(items[1], ctx, sc)
            if not isinstance(lit, Literal) or not lit.positive:
                raise ParseError("malformed", "delete effects must be plain atoms", n.span)
            slot(params, cond)[1].append((lit.predicate, lit.args))
            return
        lit = _parse_formula(n, ctx, sc)
        if not isinstance(lit, Literal):
            raise ParseError("malformed", "add effects must be plain atoms", n.span)
        slot(params, cond)[0].append((lit.predicate, lit.args))

    walk(node, (), TRUTH, scope)
    return Effect(
        tuple(
            EffectBranch(adds=tuple(adds), deletes=tuple(dels), condition=cond, params=params)
            for params, cond, adds, dels in collected
        )
    )


# ---------------------------------------------------------------------------
# Domain parsing
# ---------------------------------------------------------------------------


def _single_define(text: str, filename: str, expected: str) -> list[SExpr]:
    forms = _read_sexprs(text, filename)
    if len(forms) != 1:
        span = forms[1].span if len(forms) > 1 else SourceSpan(filename, 1, 1)
        raise ParseError("malformed", f"expected a single (define ...) form", span)
    items = _expect_list(forms[0], "(define ...)")
    if not items or _expect_atom(items[0], "define") != "define":
        raise ParseError("malformed", "file must start with (define ...)", forms[0].span)
    header = _expect_list(items[1], f"({expected} NAME)")
    if not header or _expect_atom(header[0], expected) != expected:
        raise ParseError("malformed", f"expected ({expected} NAME)", items[1].span)
    return items


def parse_domain(text: str, filename: str = "<domain>") -> Domain:
    """Parse an HDDL domain; raises ParseError with a span on the first error."""
    items = _single_define(text, filename, "domain")
    header = _expect_list(items[1], "(domain NAME)")
    name = _expect_atom(header[1], "a domain name")

    domain = Domain(name=name)
    ctx = _Context()
    method_forms: list[SExpr] = []
    action_forms: list[SExpr] = []

    for form in items[2:]:
        fitems = _expect_list(form, "a domain section")
        if not fitems:
            raise ParseError("malformed", "empty domain section", form.span)
        tag = _expect_atom(fitems[0], "a section tag")
        if tag == ":requirements":
            reqs = []
            for r in fitems[1:]:
                rv = _expect_atom(r, "a requirement flag")
                if rv not in SUPPORTED_REQUIREMENTS:
                    raise ParseError("unsupported-construct", f"requirement {rv!r} is not supported", r.span)
                reqs.append(rv)
            domain.requirements = tuple(reqs)
        elif tag == ":types":
            for child, parent, sp in _parse_typed_list(fitems[1:]):
                if child == "object":
                    continue
                domain.types[child] = None if parent == "object" else parent
                if parent != "object" and parent not in domain.types:
                    domain.types[parent] = None
            ctx.types = set(domain.types) | {"object"}
        elif tag == ":constants":
            for cname, ctype, sp in _parse_typed_list(fitems[1:]):
                ctx.check_type(ctype, sp)
                domain.constants[cname] = ctype
        elif tag == ":predicates":
            for p in fitems[1:]:
                pitems = _expect_list(p, "a predicate declaration")
                pname = _expect_atom(pitems[0], "a predicate name")
                if pname in domain.predicates:
                    raise ParseError("malformed", f"duplicate predicate {pname!r}", p.span)
                typed = _parse_typed_list(pitems[1:])
                for v, t, sp in typed:
                    ctx.check_type(t, sp)
                domain.predicates[pname] = tuple(t for _, t, _ in typed)
            ctx.predicates = {p: len(ts) for p, ts in domain.predicates.items()}
        elif tag == ":task":
            tname = _expect_atom(fitems[1], "a task name")
            params: tuple[str, ...] = ()
            rest = fitems[2:]
            while rest:
                key = _expect_atom(rest[0], "a task clause")
                if key == ":parameters":
                    typed = _parse_typed_list(_expect_list(rest[1], "parameters"))
                    for v, t, sp in typed:
                        ctx.check_type(t, sp)
                    params = tuple(t for _, t, _ in typed)
                    rest = rest[2:]
                else:
                    raise ParseError("unsupported-construct", f"task clause {key!r}", rest[0].span)
            if tname in domain.tasks:
                raise ParseError("malformed", f"duplicate task {tname!r}", fitems[1].span)
            domain.tasks[tname] = params
        elif tag == ":method":
            method_forms.append(form)
        elif tag == ":action":
            action_forms.append(form)
        else:
            raise ParseError("unsupported-construct", f"domain section {tag!r}", fitems[0].span)

    # actions first so methods can resolve primitive subtask names
    for form in action_forms:
        schema = _parse_action(form, ctx)
        if schema.name in domain.actions or schema.name in domain.tasks:
            raise ParseError("malformed", f"duplicate name {schema.name!r}", form.span)
        domain.actions[schema.name] = (schema,)
    for form in method_forms:
        domain.methods = domain.methods + (_parse_method(form, ctx, domain),)

    domain.validate()
    return domain


def _parse_params(fitems: list[SExpr], i: int, ctx: _Context) -> tuple[tuple[tuple[str, str], ...], int]:
    typed = _parse_typed_list(_expect_list(fitems[i + 1], "parameters"))
    for v, t, sp in typed:
        if not is_var(v):
            raise ParseError("malformed", f"parameter {v!r} must be a ?variable", sp)
        ctx.check_type(t, sp)
    return tuple((v, t) for v, t, _ in typed), i + 2


def _parse_action(form: SExpr, ctx: _Context) -> ActionSchema:
    fitems = _expect_list(form, "(:action ...)")
    name = _expect_atom(fitems[1], "an action name")
    if name == DUMMY_NAME:
        raise ParseError("malformed", f"action name {DUMMY_NAME!r} is reserved", fitems[1].span)
    params: tuple[tuple[str, str], ...] = ()
    precondition: Formula = TRUTH
    effect = Effect()
    i = 2
    while i < len(fitems):
        key = _expect_atom(fitems[i], "an action clause")
        if key == ":parameters":
            params, i = _parse_params(fitems, i, ctx)
        elif key == ":precondition":
            precondition = _parse_formula(fitems[i + 1], ctx, {v for v, _ in params})
            i += 2
        elif key == ":effect":
            effect = _assemble_effect(fitems[i + 1], ctx, {v for v, _ in params})
            i += 2
        else:
            raise ParseError("unsupported-construct", f"action clause {key!r}", fitems[i].span)
    return ActionSchema(name, params, precondition, effect)


def _parse_task_ref(node: SExpr, ctx: _Context, scope: set[str]) -> tuple[str, tuple[str, ...]]:
    items = _expect_list(node, "a task reference")
    name = _expect_atom(items[0], "a task name")
    args = []
    for x in items[1:]:
        term = _expect_atom(x, "a task argument")
        if is_var(term) and term not in scope:
            raise ParseError("undeclared-symbol", f"free variable {term!r} in subtask", x.span)
        args.append(term)
    return name, tuple(args)


def _parse_method(form: SExpr, ctx: _Context, domain: Domain) -> MethodSchema:
    fitems = _expect_list(form, "(:method ...)")
    name = _expect_atom(fitems[1], "a method name")
    params: tuple[tuple[str, str], ...] = ()
    task: Optional[tuple[str, tuple[str, ...]]] = None
    precondition: Formula = TRUTH
    subtasks: tuple[tuple[str, tuple[str, ...]], ...] = ()
    saw_subtasks = False
    i = 2
    while i < len(fitems):
        key = _expect_atom(fitems[i], "a method clause")
        if key == ":parameters":
            params, i = _parse_params(fitems, i, ctx)
        elif key == ":task":
            task = _parse_task_ref(fitems[i + 1], ctx, {v for v, _ in params})
            i += 2
        elif key == ":precondition":
            precondition = _parse_formula(fitems[i + 1], ctx, {v for v, _ in params})
            i += 2
        elif key == ":ordered-subtasks" or key == ":ordered-tasks":
            node = fitems[i + 1]
            items = _expect_list(node, "subtasks")
            scope = {v for v, _ in params}
            if not items:
                subtasks = ()
            elif items[0].is_atom and items[0].value == "and":
                subtasks = tuple(_parse_task_ref(x, ctx, scope) for x in items[1:])
            else:
                subtasks = (_parse_task_ref(node, ctx, scope),)
            saw_subtasks = True
            i += 2
        elif key in (":subtasks", ":tasks"):
            raise ParseError(
                "unsupported-construct",
                "unordered subtasks are not supported; use :ordered-subtasks (total order only)",
                fitems[i].span,
            )
        elif key == ":ordering":
            raise ParseError("unsupported-construct", "explicit ordering constraints are not supported", fitems[i].span)
        else:
            raise ParseError("unsupported-construct", f"method clause {key!r}", fitems[i].span)
    if task is None:
        raise ParseError("malformed", f"method {name!r} lacks a :task clause", form.span)
    if not saw_subtasks:
        raise ParseError("malformed", f"method {name!r} lacks :ordered-subtasks", form.span)
    if task[0] not in domain.tasks:
        raise ParseError("undeclared-symbol", f"method {name!r} decomposes undeclared task {task[0]!r}", form.span)
    for sub, _args in subtasks:
        if sub not in domain.tasks and sub not in domain.actions:
            raise ParseError("undeclared-symbol", f"unknown subtask {sub!r} in method {name!r}", form.span)
    return MethodSchema(name, task, params, precondition, subtasks)


# ---------------------------------------------------------------------------
# Problem parsing
# ---------------------------------------------------------------------------


def parse_problem(text: str, domain: Domain, filename: str = "<problem>") -> Problem:
    items = _single_define(text, filename, "problem")
    header = _expect_list(items[1], "(problem NAME)")
    name = _expect_atom(header[1], "a problem name")
    ctx = _Context(domain)

    objects: dict[str, str] = {}
    init_atoms: list[GroundAtom] = []
    tasks: tuple[GroundTask, ...] = ()
    domain_name = domain.name

    for form in items[2:]:
        fitems = _expect_list(form, "a problem section")
        tag = _expect_atom(fitems[0], "a section tag")
        if tag == ":domain":
            domain_name = _expect_atom(fitems[1], "a domain name")
            if domain_name != domain.name:
                raise ParseError("malformed", f"problem targets domain {domain_name!r}, got {domain.name!r}", fitems[1].span)
        elif tag == ":objects":
            for oname, otype, sp in _parse_typed_list(fitems[1:]):
                ctx.check_type(otype, sp)
                objects[oname] = otype
        elif tag == ":htn":
            i = 1
            while i < len(fitems):
                key = _expect_atom(fitems[i], "an :htn clause")
                if key == ":parameters":
                    plist = _expect_list(fitems[i + 1], "parameters")
                    if plist:
                        raise ParseError("unsupported-construct", "nonempty :htn parameters", fitems[i + 1].span)
                    i += 2
                elif key in (":ordered-subtasks", ":ordered-tasks"):
                    node = fitems[i + 1]
                    sub_items = _expect_list(node, "tasks")
                    known = set(objects) | set(domain.constants)
                    if not sub_items:
                        tasks = ()
                    elif sub_items[0].is_atom and sub_items[0].value == "and":
                        tasks = tuple(_parse_ground_task(x, ctx, domain, known) for x in sub_items[1:])
                    else:
                        tasks = (_parse_ground_task(node, ctx, domain, known),)
                    i += 2
                elif key in (":subtasks", ":tasks"):
                    raise ParseError("unsupported-construct", "unordered task networks are not supported", fitems[i].span)
                else:
                    raise ParseError("unsupported-construct", f":htn clause {key!r}", fitems[i].span)
        elif tag == ":init":
            for a in fitems[1:]:
                aitems = _expect_list(a, "an init atom")
                pname = _expect_atom(aitems[0], "a predicate name")
                args = tuple(_expect_atom(x, "a constant") for x in aitems[1:])
                ctx.check_atom(pname, len(args), a.span)
                known = set(objects) | set(domain.constants)
                for x, arg in zip(aitems[1:], args):
                    if arg not in known:
                        raise ParseError("undeclared-symbol", f"unknown object {arg!r} in init", x.span)
                init_atoms.append(GroundAtom(pname, args))
        elif tag == ":goal":
            raise ParseError(
                "unsupported-construct",
                "problems with both task networks and goals are not supported",
                fitems[0].span,
            )
        else:
            raise ParseError("unsupported-construct", f"problem section {tag!r}", fitems[0].span)

    return Problem(name, domain_name, objects, State(init_atoms), tasks)


def _parse_ground_task(node: SExpr, ctx: _Context, domain: Domain, known_objects: set[str]) -> GroundTask:
    items = _expect_list(node, "a task")
    name = _expect_atom(items[0], "a task name")
    if name not in domain.tasks and name not in domain.actions:
        raise ParseError("undeclared-symbol", f"unknown task {name!r}", node.span)
    args = []
    for x in items[1:]:
        arg = _expect_atom(x, "a constant")
        if arg not in known_objects:
            raise ParseError("undeclared-symbol", f"unknown object {arg!r}", x.span)
        args.append(arg)
    expected = domain.tasks.get(name)
    if expected is None:
        expected = tuple(t for _, t in domain.actions[name][0].params)
    if len(args) != len(expected):
        raise ParseError("arity", f"task {name!r} expects {len(expected)} args, got {len(args)}", node.span)
    return GroundTask(name, tuple(args))


# ---------------------------------------------------------------------------
# Disturbance parsing
# ---------------------------------------------------------------------------


def parse_disturbances(text: str, domain: Domain, filename: str = "<disturbances>") -> list[DisturbanceSpec]:
    items = _single_define(text, filename, "disturbances")
    ctx = _Context(domain)
    out: list[DisturbanceSpec] = []
    for form in items[2:]:
        fitems = _expect_list(form, "a disturbances section")
        tag = _expect_atom(fitems[0], "a section tag")
        if tag == ":domain":
            continue
        if tag != ":disturbance":
            raise ParseError("unsupported-construct", f"disturbances section {tag!r}", fitems[0].span)
        name = _expect_atom(fitems[1], "a disturbance name")
        precondition: Formula = TRUTH
        effect = Effect()
        placement: Union[int, str] = RANDOM_PLACEMENT
        i = 2
        while i < len(fitems):
            key = _expect_atom(fitems[i], "a disturbance clause")
            if key == ":precondition":
                precondition = _parse_formula(fitems[i + 1], ctx, set())
                i += 2
            elif key == ":effect":
                effect = _assemble_effect(fitems[i + 1], ctx, set())
                i += 2
            elif key == ":after":
                word = _expect_atom(fitems[i + 1], "an index or 'random'")
                if word == RANDOM_PLACEMENT:
                    placement = RANDOM_PLACEMENT
                else:
                    try:
                        placement = int(word)
                    except ValueError:
                        raise ParseError("malformed", f":after expects an integer or 'random', got {word!r}", fitems[i + 1].span)
                    if placement < 0:
                        raise ParseError("malformed", ":after index must be >= 0", fitems[i + 1].span)
                i += 2
            else:
                raise ParseError("unsupported-construct", f"disturbance clause {key!r}", fitems[i].span)
        out.append(DisturbanceSpec(name, precondition, effect, placement))
    return out


# ---------------------------------------------------------------------------
# Printing
# ---------------------------------------------------------------------------


def format_formula(f: Formula) -> str:
    return str(f)


def format_effect(e: Effect) -> str:
    parts: list[str] = []
    for br in e.branches:
        bits = [f"({p}{''.join(' ' + a for a in args)})" for p, args in br.adds]
        bits += [f"(not ({p}{''.join(' ' + a for a in args)}))" for p, args in br.deletes]
        if not bits:
            continue
        body = bits[0] if len(bits) == 1 else "(and " + " ".join(bits) + ")"
        if br.condition != TRUTH:
            body = f"(when {format_formula(br.condition)} {body})"
        for v, t in reversed(br.params):
            body = f"(forall ({v} - {t}) {body})"
        parts.append(body)
    if not parts:
        return "()"
    if len(parts) == 1:
        return parts[0]
    return "(and " + " ".join(parts) + ")"


def _format_typed(pairs: list[tuple[str, str]]) -> str:
    return " ".join(f"{n} - {t}" for n, t in pairs)


def format_domain(domain: Domain) -> str:
    lines = [f"(define (domain {domain.name})"]
    reqs = domain.requirements or (":htn", ":typing", ":negative-preconditions")
    lines.append(f"  (:requirements {' '.join(reqs)})")
    if domain.types:
        typed = " ".join(f"{c} - {p or 'object'}" for c, p in sorted(domain.types.items()))
        lines.append(f"  (:types {typed})")
    if domain.constants:
        lines.append(f"  (:constants {_format_typed(sorted(domain.constants.items()))})")
    if domain.predicates:
        preds = []
        for p, ts in domain.predicates.items():
            args = "".join(f" ?x{i} - {t}" for i, t in enumerate(ts))
            preds.append(f"({p}{args})")
        lines.append(f"  (:predicates {' '.join(preds)})")
    for t, ts in domain.tasks.items():
        args = "".join(f" ?x{i} - {ty}" for i, ty in enumerate(ts))
        lines.append(f"  (:task {t} :parameters ({args.strip()}))" if ts else f"  (:task {t} :parameters ())")
    for m in domain.methods:
        lines.append(f"  (:method {m.name}")
        lines.append(f"    :parameters ({_format_typed(list(m.params))})")
        tname, targs = m.task
        lines.append(f"    :task ({tname}{''.join(' ' + a for a in targs)})")
        if m.precondition != TRUTH:
            lines.append(f"    :precondition {format_formula(m.precondition)}")
        subs = " ".join(f"({n}{''.join(' ' + a for a in args)})" for n, args in m.subtasks)
        if len(m.subtasks) == 1:
            lines.append(f"    :ordered-subtasks {subs})")
        else:
            lines.append(f"    :ordered-subtasks ({('and ' + subs) if m.subtasks else ''}))")
    for variants in domain.actions.values():
        for a in variants:
            if a.variant is not None:
                continue  # rewritten copies are printed by the compile emitter
            lines.append(f"  (:action {a.name}")
            lines.append(f"    :parameters ({_format_typed(list(a.params))})")
            if a.precondition != TRUTH:
                lines.append(f"    :precondition {format_formula(a.precondition)}")
            if not a.effect.is_empty():
                lines.append(f"    :effect {format_effect(a.effect)}")
            lines.append("  )")
    lines.append(")")
    return "\n".join(lines) + "\n"


def format_problem(problem: Problem) -> str:
    lines = [f"(define (problem {problem.name})", f"  (:domain {problem.domain_name})"]
    if problem.objects:
        lines.append(f"  (:objects {_format_typed(sorted(problem.objects.items()))})")
    subs = " ".join(str(t) for t in problem.tasks)
    if len(problem.tasks) != 1:
        subs = f"({('and ' + subs) if problem.tasks else ''})"
    lines.append("  (:htn :parameters ()")
    lines.append(f"    :ordered-subtasks {subs})")
    atoms = " ".join(str(a) for a in problem.init.canonical())
    lines.append(f"  (:init {atoms})")
    lines.append(")")
    return "\n".join(lines) + "\n"


def format_disturbances(name: str, domain_name: str, specs: list[DisturbanceSpec]) -> str:
    lines = [f"(define (disturbances {name})", f"  (:domain {domain_name})"]
    for s in specs:
        lines.append(f"  (:disturbance {s.name}")
        if s.precondition != TRUTH:
            lines.append(f"    :precondition {format_formula(s.precondition)}")
        if not s.effect.is_empty():
            lines.append(f"    :effect {format_effect(s.effect)}")
        lines.append(f"    :after {s.placement})")
    lines.append(")")
    return "\n".join(lines) + "\n"
