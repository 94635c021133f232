"""Backjumping repair over causal links (the tree-level strategy).

Failure detection projects the unexecuted tree forward from the
observed state and reports the earliest node whose aggregated
precondition is violated, ordering a parent before its children: the
parent's precondition is what licensed inserting the children, so
repairing only a child of a failed parent still leaves a failed plan.

Repair backjumps to the failure node's ancestor tasks, nearest first,
replanning each from the current state while the executed prefix stays
frozen.  A candidate is accepted only if the whole repaired unexecuted
tree is applicable in the observed state (every action's aggregated
precondition, not just its own, holds under projection).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .disturb import RepairProblem
from .errors import StructuralError
from .model import GroundAtom, State, Universe, apply_unchecked, consumed_atoms
from .planner import Bound, SearchBudget
from .repairs import RepairOutcome, RepairSet, repair_enumerate, repair_search
from .tree import (
    ACTION,
    METHOD,
    DecompositionTree,
    TreeFailure,
    TreeNode,
    find_tree_failure,
    pre_star_chain,
)

INIT_NODE = "init"


@dataclass
class CausalLinkGraph:
    """Who establishes each atom every node's aggregated precondition consumes.

    ``producers`` maps (consumer node id, atom) to the establishing
    action node, or the virtual init node for atoms true from the
    start.  ``consumers`` lists each node's consumed atoms;
    ``decomposition`` holds the task -> method -> child edges.
    """

    producers: dict[tuple[int, GroundAtom], object] = field(default_factory=dict)
    consumers: dict[int, frozenset[GroundAtom]] = field(default_factory=dict)
    decomposition: list[tuple[TreeNode, TreeNode]] = field(default_factory=list)
    nodes: dict[int, TreeNode] = field(default_factory=dict)

    def establisher(self, node: TreeNode, atom: GroundAtom) -> object:
        return self.producers[(id(node), atom)]


def build_links(tree: DecompositionTree, s0: State, universe: Universe) -> CausalLinkGraph:
    """Causal links plus decomposition edges for an applicable tree.

    For every positive atom consumed by a node's aggregated
    precondition, the establisher is the latest earlier producer, or
    the virtual init node.  Raises StructuralError on an inapplicable
    tree, where some consumed atom has no establisher at all.
    """
    failure = find_tree_failure(tree, s0, universe)
    if failure is not None:
        raise StructuralError(
            f"cannot build links: {failure.formula} violated at action {failure.leaf.action}"
        )
    graph = CausalLinkGraph()

    def record_edges(node: TreeNode) -> None:
        for child in node.children:
            graph.decomposition.append((node, child))
            record_edges(child)

    record_edges(tree.root)

    last_producer: dict[GroundAtom, object] = {}
    state = s0
    for leaf in tree.action_leaves():
        for entry in pre_star_chain(tree, leaf):
            node = entry.node
            atoms = consumed_atoms(entry.formula, state, universe, None)
            previous = graph.consumers.get(id(node), frozenset())
            graph.consumers[id(node)] = previous | frozenset(atoms)
            graph.nodes[id(node)] = node
            for atom in atoms:
                graph.producers[(id(node), atom)] = last_producer.get(atom, INIT_NODE)
        before = state.atoms
        state = apply_unchecked(state, leaf.action, universe)
        for atom in state.atoms - before:
            last_producer[atom] = leaf
        for atom in before - state.atoms:
            last_producer.pop(atom, None)
    return graph


def find_failure(rp: RepairProblem) -> Optional[TreeFailure]:
    """The failure node d_f: earliest violated aggregated precondition in
    the unexecuted tree under projection from the observed state, with
    parents reported before children.  None means repair is unnecessary."""
    return find_tree_failure(rp.t_u, rp.s_c, rp.universe)


def _detector(rp: RepairProblem):
    def detect(view: DecompositionTree) -> Optional[TreeFailure]:
        return find_tree_failure(view, rp.s_c, rp.universe)

    return detect


def repair_sf(rp: RepairProblem, budget: Optional[SearchBudget] = None) -> RepairOutcome:
    """Tree-level repair: accepted trees are applicable in the observed state."""
    return repair_search(rp, _detector(rp), budget)


def repair_sf_all(rp: RepairProblem, bound: Bound, budget: Optional[SearchBudget] = None) -> RepairSet:
    """Every tree the nondeterministic tree-level repair can return."""
    return repair_enumerate(rp, _detector(rp), bound, budget)
