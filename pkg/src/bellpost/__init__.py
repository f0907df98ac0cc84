"""Exact tools for deciding when post-selection can fake a Bell violation.

The package checks d-separation with path-level diagnostics, mechanises the
all-but-one safety argument on Bell graphs, evaluates selection rules and
finite causal models in rational arithmetic, and computes local bounds of
linear Bell functionals.
"""

from .causal_graph import (
    CausalGraph,
    ConsistencyError,
    GraphError,
    Path,
    all_paths,
    d_separated,
    path_blocked,
)
from .inequality import BellFunctional, chsh, evaluate, local_bound, violation_report
from .scenario import bell_graph, verify_erasure_necessity, verify_theorem
from .scm import Behavior, FiniteModel, behavior, postselect
from .selection import OutcomeSpace, SelectionRule, Support, check_all_but_one, parse_rule

__version__ = "0.1.0"

__all__ = [
    "Behavior", "BellFunctional", "CausalGraph", "ConsistencyError", "FiniteModel",
    "GraphError", "OutcomeSpace", "Path", "SelectionRule", "Support",
    "all_paths", "behavior", "bell_graph", "check_all_but_one", "chsh",
    "d_separated", "evaluate", "local_bound", "parse_rule", "path_blocked",
    "postselect", "verify_erasure_necessity", "verify_theorem", "violation_report",
]
