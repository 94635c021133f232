"""Decomposition trees and their semantic operations.

A d-tree is an ordered tree with a root-sequence node over the top-level
tasks; every nonprimitive task node has exactly one method child, every
method node has its subtask nodes as children (or a single dummy-action
child when it has no subtasks), and actions are leaves.

Nodes carry a ``first_in_parent`` flag fixed at construction time.  The
aggregated precondition of a node chains through parent methods exactly
when the node heads its sibling list, so pruned executed/unexecuted
views preserve the flag of the full tree they came from: a node that
followed an executed sibling does not start re-checking ancestor method
preconditions just because the sibling was pruned away.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterator, Optional

from .errors import StructuralError
from .model import (
    TRUTH,
    Formula,
    GroundAction,
    GroundMethod,
    GroundTask,
    State,
    Universe,
    apply_unchecked,
    conjoin,
    eval_formula,
)

ROOT = "root"
TASK = "task"
METHOD = "method"
ACTION = "action"


class TreeNode:
    """One node of a decomposition tree."""

    __slots__ = ("kind", "label", "children", "first_in_parent", "input_state")

    def __init__(
        self,
        kind: str,
        label: Optional[object] = None,
        children: Optional[list["TreeNode"]] = None,
        first_in_parent: bool = True,
        input_state: Optional[State] = None,
    ):
        self.kind = kind
        self.label = label
        self.children: list[TreeNode] = children if children is not None else []
        self.first_in_parent = first_in_parent
        self.input_state = input_state

    @property
    def action(self) -> GroundAction:
        assert self.kind == ACTION
        return self.label  # type: ignore[return-value]

    @property
    def task(self) -> GroundTask:
        assert self.kind == TASK
        return self.label  # type: ignore[return-value]

    @property
    def method(self) -> GroundMethod:
        assert self.kind == METHOD
        return self.label  # type: ignore[return-value]

    def is_leaf(self) -> bool:
        return not self.children

    def __repr__(self) -> str:
        return f"<{self.kind} {self.label}>"


def task_node(task: GroundTask, first: bool = True) -> TreeNode:
    return TreeNode(TASK, task, [], first)


def action_node(action: GroundAction, first: bool = True) -> TreeNode:
    return TreeNode(ACTION, action, [], first)


class DecompositionTree:
    """A d-tree plus its postorder index.

    Trees are treated as immutable after construction; operations that
    modify them (``split``, ``replace``) build new trees that share
    untouched subtree objects, so node identity is stable.
    """

    def __init__(self, root: TreeNode):
        if root.kind != ROOT:
            raise StructuralError("tree root must be a root-sequence node")
        self.root = root
        self._postorder: list[TreeNode] = []
        self._index: dict[int, int] = {}
        self._parents: dict[int, Optional[TreeNode]] = {}
        self._build_index()

    def _build_index(self) -> None:
        self._postorder.clear()
        self._index.clear()
        self._parents.clear()

        def walk(node: TreeNode, parent: Optional[TreeNode]) -> None:
            self._parents[id(node)] = parent
            for child in node.children:
                walk(child, node)
            self._index[id(node)] = len(self._postorder)
            self._postorder.append(node)

        walk(self.root, None)

    def postorder(self) -> tuple[TreeNode, ...]:
        return tuple(self._postorder)

    def postorder_index(self, node: TreeNode) -> int:
        try:
            return self._index[id(node)]
        except KeyError:
            raise StructuralError("node does not belong to this tree") from None

    def contains(self, node: TreeNode) -> bool:
        return id(node) in self._index

    def parent(self, node: TreeNode) -> Optional[TreeNode]:
        if id(node) not in self._parents:
            raise StructuralError("node does not belong to this tree")
        return self._parents[id(node)]

    def path_to(self, node: TreeNode) -> tuple[TreeNode, ...]:
        """Nodes from the root down to ``node`` inclusive."""
        path = [node]
        cur = self.parent(node)
        while cur is not None:
            path.append(cur)
            cur = self.parent(cur)
        return tuple(reversed(path))

    def action_leaves(self) -> tuple[TreeNode, ...]:
        return tuple(n for n in self._postorder if n.kind == ACTION)

    def plan(self) -> tuple[GroundAction, ...]:
        """Left-to-right leaf action sequence, dummy actions included."""
        return tuple(n.action for n in self.action_leaves())

    def task_nodes(self) -> tuple[TreeNode, ...]:
        return tuple(n for n in self._postorder if n.kind == TASK)

    def size(self) -> int:
        return len(self._postorder)

    def depth(self) -> int:
        def d(node: TreeNode) -> int:
            return 1 + max((d(c) for c in node.children), default=0)

        return d(self.root)

    def canonical_key(self) -> tuple:
        """Structural identity over (kind, label, children), ignoring states."""
        return _canon(self.root)

    def copy(self) -> "DecompositionTree":
        return DecompositionTree(_deep_copy(self.root))

    def __repr__(self) -> str:
        return f"DecompositionTree(plan={[str(a) for a in self.plan()]})"


def _canon(node: TreeNode) -> tuple:
    if node.kind == ACTION:
        lab: tuple = (node.action.name, node.action.args)
    elif node.kind == TASK:
        lab = (node.task.name, node.task.args)
    elif node.kind == METHOD:
        lab = (node.method.name, node.method.args)
    else:
        lab = ()
    return (node.kind, lab, tuple(_canon(c) for c in node.children))


def _deep_copy(node: TreeNode) -> TreeNode:
    return TreeNode(
        node.kind,
        node.label,
        [_deep_copy(c) for c in node.children],
        node.first_in_parent,
        node.input_state,
    )


def plan_of(tree: DecompositionTree) -> tuple[GroundAction, ...]:
    return tree.plan()


def visible_plan(tree: DecompositionTree) -> tuple[GroundAction, ...]:
    """The plan without dummy actions, for user-facing printouts."""
    return tuple(a for a in tree.plan() if not a.is_dummy())


# ---------------------------------------------------------------------------
# Aggregated preconditions
# ---------------------------------------------------------------------------


def pre_star_path(path: tuple[TreeNode, ...]) -> Formula:
    """Aggregated precondition of the node at the end of a root path."""
    node = path[-1]
    parent = path[-2] if len(path) > 1 else None
    if node.kind == ROOT:
        return TRUTH
    if node.kind == ACTION:
        own = node.action.precondition
        if parent is not None and parent.kind == METHOD and node.first_in_parent:
            return conjoin(own, pre_star_path(path[:-1]))
        return own
    if node.kind == TASK:
        if parent is None or parent.kind == ROOT:
            return TRUTH
        if node.first_in_parent:
            return pre_star_path(path[:-1])
        return TRUTH
    if node.kind == METHOD:
        return conjoin(node.method.precondition, pre_star_path(path[:-1]))
    raise StructuralError(f"unknown node kind {node.kind!r}")


def pre_star(tree: DecompositionTree, node: TreeNode) -> Formula:
    """The precondition a node must satisfy, unioned along first-child chains."""
    return pre_star_path(tree.path_to(node))


@dataclass(frozen=True)
class ChainEntry:
    """One contributor to an action's aggregated precondition."""

    node: TreeNode  # the action itself or an ancestor method node
    formula: Formula


def pre_star_chain(tree: DecompositionTree, leaf: TreeNode) -> tuple[ChainEntry, ...]:
    """Contributors to a leaf's pre*, outermost (rootmost) first.

    A parent's precondition is chronologically prior to its child's:
    repairing only the child of a failed parent leaves a failed plan.
    """
    path = tree.path_to(leaf)
    chain: list[ChainEntry] = [ChainEntry(leaf, leaf.action.precondition)]
    i = len(path) - 1
    while i > 0:
        node, parent = path[i], path[i - 1]
        if node.kind in (ACTION, TASK):
            if parent.kind == METHOD and node.first_in_parent:
                chain.append(ChainEntry(parent, parent.method.precondition))
                i -= 1
            else:
                break
        elif node.kind == METHOD:
            i -= 1  # a method always defers to its task's chain position
        else:
            break
    return tuple(reversed(chain))


@dataclass(frozen=True)
class TreeFailure:
    """First violated aggregated precondition found in a tree walk."""

    node: TreeNode  # the failing method or action node
    leaf: TreeNode  # action at whose input state the violation shows
    leaf_index: int  # index of that action in the tree's plan
    state: State
    formula: Formula


def find_tree_failure(
    tree: DecompositionTree, state: State, universe: Universe
) -> Optional[TreeFailure]:
    """Walk the plan; report the earliest pre*-violated node, parents first."""
    s = state
    for i, leaf in enumerate(tree.action_leaves()):
        for entry in pre_star_chain(tree, leaf):
            if not eval_formula(entry.formula, s, universe):
                return TreeFailure(entry.node, leaf, i, s, entry.formula)
        s = apply_unchecked(s, leaf.action, universe)
    return None


def tree_applicable(tree: DecompositionTree, state: State, universe: Universe) -> bool:
    """True iff every action's pre* holds at its execution state.

    Strictly stronger than applicability of the tree's plan.
    """
    return find_tree_failure(tree, state, universe) is None


def gamma_tree(tree: DecompositionTree, state: State, universe: Universe) -> State:
    """State produced by executing an applicable tree."""
    failure = find_tree_failure(tree, state, universe)
    if failure is not None:
        raise StructuralError(f"tree not applicable: {failure.formula} false at action {failure.leaf.action}")
    s = state
    for leaf in tree.action_leaves():
        s = apply_unchecked(s, leaf.action, universe)
    return s


# ---------------------------------------------------------------------------
# Execution split
# ---------------------------------------------------------------------------

FULLY_EXECUTED = "fully-executed"
UNEXECUTED = "unexecuted"
PARTIALLY_EXECUTED = "partially-executed"


def _leaf_positions(tree: DecompositionTree) -> dict[int, int]:
    return {id(n): i for i, n in enumerate(tree.action_leaves())}


def _span(node: TreeNode, pos: dict[int, int]) -> tuple[int, int]:
    """(first, last) action positions under a node; root-only nodes get (-1, -1)."""
    if node.kind == ACTION:
        p = pos[id(node)]
        return p, p
    lo, hi = -1, -1
    for c in node.children:
        clo, chi = _span(c, pos)
        if clo == -1:
            continue
        if lo == -1:
            lo = clo
        hi = chi
    return lo, hi


def exec_status(tree: DecompositionTree, a_c: Optional[TreeNode], node: TreeNode) -> str:
    """Three-way execution classification of a node relative to a_c."""
    if a_c is None:
        return UNEXECUTED
    if a_c.kind != ACTION:
        raise StructuralError("a_c must be an action leaf")
    pos = _leaf_positions(tree)
    cut = pos[id(a_c)]
    lo, hi = _span(node, pos)
    if lo == -1:
        return UNEXECUTED  # childless root: nothing to execute
    if hi <= cut:
        return FULLY_EXECUTED
    if lo > cut:
        return UNEXECUTED
    return PARTIALLY_EXECUTED


def _share_or_copy(node: TreeNode, keep: Callable[[TreeNode], bool]) -> Optional[TreeNode]:
    """Drop leaves rejected by ``keep``; share subtrees that survive whole."""
    if node.kind == ACTION:
        return node if keep(node) else None
    surviving = []
    changed = False
    for c in node.children:
        sub = _share_or_copy(c, keep)
        if sub is None:
            changed = True
        else:
            surviving.append(sub)
            if sub is not c:
                changed = True
    if not surviving and node.kind != ROOT:
        return None
    if not changed:
        return node
    return TreeNode(node.kind, node.label, surviving, node.first_in_parent, node.input_state)


def split(tree: DecompositionTree, a_c: Optional[TreeNode]) -> tuple[DecompositionTree, DecompositionTree]:
    """Split into executed part T_x (leaves up to and including a_c) and
    unexecuted part T_u (the rest); partially executed tasks appear,
    pruned, in both."""
    if a_c is None:
        empty = TreeNode(ROOT, None, [], True, tree.root.input_state)
        return DecompositionTree(empty), DecompositionTree(_deep_share(tree.root))
    if a_c.kind != ACTION or not tree.contains(a_c):
        raise StructuralError("a_c must be an action leaf of the tree")
    pos = _leaf_positions(tree)
    cut = pos[id(a_c)]

    def executed(n: TreeNode) -> bool:
        return pos[id(n)] <= cut

    def unexecuted(n: TreeNode) -> bool:
        return pos[id(n)] > cut

    tx_root = _share_or_copy(tree.root, executed)
    tu_root = _share_or_copy(tree.root, unexecuted)
    if tx_root is None:
        tx_root = TreeNode(ROOT, None, [], True)
    if tu_root is None:
        tu_root = TreeNode(ROOT, None, [], True)
    return DecompositionTree(tx_root), DecompositionTree(tu_root)


def _deep_share(node: TreeNode) -> TreeNode:
    # a fresh root object so the view indexes independently, children shared
    return TreeNode(node.kind, node.label, list(node.children), node.first_in_parent, node.input_state)


# ---------------------------------------------------------------------------
# Replacement
# ---------------------------------------------------------------------------


def _is_ancestor(tree: DecompositionTree, a: TreeNode, b: TreeNode) -> bool:
    return a in tree.path_to(b)[:-1]


def replace(
    tree: DecompositionTree,
    targets: list[TreeNode] | tuple[TreeNode, ...] | TreeNode,
    subtrees: list[TreeNode] | tuple[TreeNode, ...] | TreeNode,
) -> DecompositionTree:
    """Substitute the subtree at each target task with a replacement tree.

    Targets must be pairwise non-ancestral task nodes; each replacement
    must be rooted at a task node with the same label.  Untouched nodes
    are shared with the input tree.
    """
    if isinstance(targets, TreeNode):
        targets = [targets]
    if isinstance(subtrees, TreeNode):
        subtrees = [subtrees]
    if len(targets) != len(subtrees):
        raise StructuralError("targets and subtrees must align")
    for t in targets:
        if t.kind != TASK or not tree.contains(t):
            raise StructuralError("replace targets must be task nodes of the tree")
    for t, s in zip(targets, subtrees):
        if s.kind != TASK or s.label != t.label:
            raise StructuralError(f"replacement root {s!r} does not match target label {t.label}")
    for i, a in enumerate(targets):
        for b in targets[i + 1 :]:
            if a is b or _is_ancestor(tree, a, b) or _is_ancestor(tree, b, a):
                raise StructuralError("replace targets overlap")

    mapping = {id(t): s for t, s in zip(targets, subtrees)}
    touched: set[int] = set()

    def mark(node: TreeNode) -> bool:
        hit = id(node) in mapping
        for c in node.children:
            hit = mark(c) or hit
        if hit:
            touched.add(id(node))
        return hit

    mark(tree.root)

    def rebuild(node: TreeNode) -> TreeNode:
        if id(node) in mapping:
            rep = mapping[id(node)]
            # grafted root adopts the target's sibling position
            return TreeNode(rep.kind, rep.label, list(rep.children), node.first_in_parent, rep.input_state)
        if id(node) not in touched:
            return node
        return TreeNode(
            node.kind,
            node.label,
            [rebuild(c) for c in node.children],
            node.first_in_parent,
            node.input_state,
        )

    return DecompositionTree(rebuild(tree.root))


def make_root(children: list[TreeNode]) -> TreeNode:
    for i, c in enumerate(children):
        c.first_in_parent = i == 0
    return TreeNode(ROOT, None, children, True)


def changed_node_count(before: DecompositionTree, after: DecompositionTree) -> int:
    """Stability metric: nodes of ``after`` with no structural twin in ``before``.

    Counts nodes whose canonical subtree differs at the same tree
    position; one instantiation of plan-repair stability.
    """

    def diff(a: Optional[TreeNode], b: Optional[TreeNode]) -> int:
        if b is None:
            return 0
        if a is None:
            return _count(b)
        if (a.kind, _lab(a)) != (b.kind, _lab(b)):
            return _count(b)
        n = 0
        for i, bc in enumerate(b.children):
            ac = a.children[i] if i < len(a.children) else None
            n += diff(ac, bc)
        return n

    def _count(n: TreeNode) -> int:
        return 1 + sum(_count(c) for c in n.children)

    def _lab(n: TreeNode) -> object:
        return _canon(n)[1]

    return diff(before.root, after.root)
