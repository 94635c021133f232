"""Total-order HTN planning and plan repair.

Three repair strategies over one planning core:

* rewrite (``rw``): compile a prefix-forcing problem and replan it;
* backjumping over causal links (``sf``): fix the tree so every
  aggregated precondition projects from the observed state;
* simulation backtracking (``ip``): fix the plan so every action's own
  precondition survives forward simulation.

A bounded exhaustive oracle materializes each strategy's full solution
set on small instances and machine-checks the containments between
them.
"""

from .errors import (
    DecodeError,
    DomainValidationError,
    HrepairError,
    ParseError,
    PreconditionError,
    SchemaError,
    SourceSpan,
    StructuralError,
)
from .model import (
    Domain,
    GroundAction,
    GroundAtom,
    GroundTask,
    Problem,
    State,
    Universe,
    apply_action,
    apply_plan,
    eval_formula,
    make_universe,
)
from .planner import Bound, SearchBudget, resume_from, solve, solve_all
from .tree import DecompositionTree, pre_star, replace, split, tree_applicable
from .disturb import FailureReport, RepairProblem, classify, inject, make_repair_problem
from .rewrite import compile_repair, decode, repair_rw
from .shopfixer import build_links, find_failure, repair_sf
from .ipyhopper import repair_ip, simulate

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
