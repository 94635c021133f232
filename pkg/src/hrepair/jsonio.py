"""Canonical JSON serialization for states, plans, and trees.

Canonical form: sorted object keys, compact separators, a single
trailing newline.  Equal structures serialize to identical bytes, so
golden files and determinism checks can compare output directly.
Schema violations are reported with a JSON-pointer path.
"""

from __future__ import annotations

import json
from typing import Any, Optional

from .errors import SchemaError
from .model import (
    DUMMY_NAME,
    Domain,
    GroundAction,
    GroundAtom,
    GroundTask,
    State,
    ground_action,
    ground_method,
)
from .tree import ACTION, METHOD, ROOT, TASK, DecompositionTree, TreeNode

TREE_FORMAT = "htn-tree"
PLAN_FORMAT = "htn-plan"
VERSION = 1


def dumps_canonical(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"


# ---------------------------------------------------------------------------
# States and plans
# ---------------------------------------------------------------------------


def state_to_obj(state: State) -> list:
    return [[a.predicate, list(a.args)] for a in state.canonical()]


def state_from_obj(obj: Any, pointer: str = "/state") -> State:
    if not isinstance(obj, list):
        raise SchemaError("state must be a list of [predicate, args]", pointer)
    atoms = []
    for i, entry in enumerate(obj):
        p = f"{pointer}/{i}"
        if not (isinstance(entry, list) and len(entry) == 2 and isinstance(entry[0], str)):
            raise SchemaError("atom must be [predicate, [args...]]", p)
        atoms.append(GroundAtom(entry[0], tuple(entry[1])))
    return State(atoms)


def plan_to_json(actions: tuple[GroundAction, ...] | list[GroundAction]) -> str:
    return dumps_canonical(
        {
            "format": PLAN_FORMAT,
            "version": VERSION,
            "actions": [{"name": a.name, "args": list(a.args)} for a in actions],
        }
    )


def plan_from_json(text: str, domain: Domain) -> tuple[GroundAction, ...]:
    obj = json.loads(text)
    if not isinstance(obj, dict) or obj.get("format") != PLAN_FORMAT:
        raise SchemaError(f"expected format {PLAN_FORMAT!r}", "/format")
    actions = obj.get("actions")
    if not isinstance(actions, list):
        raise SchemaError("actions must be a list", "/actions")
    out = []
    for i, entry in enumerate(actions):
        pointer = f"/actions/{i}"
        if not isinstance(entry, dict) or "name" not in entry:
            raise SchemaError("action must be an object with name/args", pointer)
        out.append(_resolve_action(domain, entry["name"], tuple(entry.get("args", ())), pointer))
    return tuple(out)


def _resolve_action(domain: Domain, name: str, args: tuple[str, ...], pointer: str) -> GroundAction:
    try:
        variants = domain.action_variants(name)
    except Exception:
        raise SchemaError(f"unknown action {name!r}", pointer) from None
    schema = next((v for v in variants if v.variant is None), variants[0])
    try:
        return ground_action(schema, args)
    except Exception as exc:
        raise SchemaError(str(exc), pointer) from None


# ---------------------------------------------------------------------------
# Trees
# ---------------------------------------------------------------------------


def _node_to_obj(node: TreeNode, include_states: bool) -> dict:
    out: dict[str, Any] = {"kind": node.kind}
    if node.kind == ROOT:
        pass
    elif node.kind == ACTION:
        a = node.action
        out["name"] = a.name
        out["args"] = list(a.args)
        out["first"] = node.first_in_parent
    elif node.kind == TASK:
        t = node.task
        out["name"] = t.name
        out["args"] = list(t.args)
        out["first"] = node.first_in_parent
    elif node.kind == METHOD:
        m = node.method
        out["name"] = m.name
        out["args"] = list(m.args)
        out["first"] = node.first_in_parent
    if node.kind != ACTION:
        out["children"] = [_node_to_obj(c, include_states) for c in node.children]
    if include_states and node.input_state is not None:
        out["input_state"] = state_to_obj(node.input_state)
    return out


def tree_to_json(tree: DecompositionTree, include_states: bool = True) -> str:
    return dumps_canonical(
        {"format": TREE_FORMAT, "version": VERSION, "root": _node_to_obj(tree.root, include_states)}
    )


def _require(cond: bool, message: str, pointer: str) -> None:
    if not cond:
        raise SchemaError(message, pointer)


def _node_from_obj(obj: Any, domain: Domain, pointer: str, first: bool) -> TreeNode:
    _require(isinstance(obj, dict), "node must be an object", pointer)
    kind = obj.get("kind")
    _require(kind in (ROOT, TASK, METHOD, ACTION), f"bad kind {kind!r}", f"{pointer}/kind")
    state = None
    if "input_state" in obj:
        state = state_from_obj(obj["input_state"], f"{pointer}/input_state")
    if kind == ACTION:
        name = obj.get("name")
        _require(isinstance(name, str), "action needs a name", f"{pointer}/name")
        args = tuple(obj.get("args", ()))
        if name == DUMMY_NAME:
            action = ground_action(domain.action_variants(DUMMY_NAME)[0], ())
        else:
            action = _resolve_action(domain, name, args, pointer)
        return TreeNode(ACTION, action, [], bool(obj.get("first", first)), state)
    children_obj = obj.get("children", [])
    _require(isinstance(children_obj, list), "children must be a list", f"{pointer}/children")
    children = [
        _node_from_obj(c, domain, f"{pointer}/children/{i}", i == 0) for i, c in enumerate(children_obj)
    ]
    if kind == ROOT:
        return TreeNode(ROOT, None, children, True, state)
    name = obj.get("name")
    _require(isinstance(name, str), f"{kind} needs a name", f"{pointer}/name")
    args = tuple(obj.get("args", ()))
    if kind == TASK:
        return TreeNode(TASK, GroundTask(name, args), children, bool(obj.get("first", first)), state)
    schema = next((m for m in domain.methods if m.name == name), None)
    _require(schema is not None, f"unknown method {name!r}", f"{pointer}/name")
    assert schema is not None
    _require(len(args) == len(schema.params), f"method {name!r} arity mismatch", f"{pointer}/args")
    binding = {v: a for (v, _), a in zip(schema.params, args)}
    gm = ground_method(schema, binding)
    return TreeNode(METHOD, gm, children, bool(obj.get("first", first)), state)


def tree_from_json(text: str, domain: Domain) -> DecompositionTree:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc.msg}", "") from None
    _require(isinstance(obj, dict), "document must be an object", "")
    _require(obj.get("format") == TREE_FORMAT, f"expected format {TREE_FORMAT!r}", "/format")
    _require("root" in obj, "missing root", "/root")
    root = _node_from_obj(obj["root"], domain, "/root", True)
    _require(root.kind == ROOT, "root node must have kind 'root'", "/root/kind")
    return DecompositionTree(root)


def repair_problem_to_obj(rp) -> dict:
    """Debug/export form of a repair problem (cross-tool inspection)."""
    return {
        "position": rp.position,
        "observed_state": state_to_obj(rp.s_c),
        "predicted_state": state_to_obj(rp.predicted),
        "executed_plan": [{"name": a.name, "args": list(a.args)} for a in rp.pi_x],
        "unexecuted_plan": [{"name": a.name, "args": list(a.args)} for a in rp.pi_u],
        "disturbance": None if rp.disturbance is None else rp.disturbance.name,
        "tree": json.loads(tree_to_json(rp.tree))["root"],
    }
