"""Reach-avoid motion planning and control with maneuver automata over
gridded workspaces: scenario parsing, workspace abstraction, piecewise
affine motion primitives, product-automaton policy synthesis, and
closed-loop hybrid simulation."""

__version__ = "0.1.0"

from .errors import (  # noqa: F401
    EmptyWorkspaceError,
    OutOfWorkspaceError,
    PolicyMismatchError,
    ScenarioError,
    StartStateError,
    UnreachableGoalError,
)
from .scenario import Scenario, load_scenario, parse_scenario, scenario_hash, scenario_to_json  # noqa: F401
from .workspace import WorkspaceGraph, build_ots, global_to_cell  # noqa: F401
from .primitives import AtomicParams, AtomicPrimitive, atomic_primitive, control, in_invariant  # noqa: F401
from .maneuver import ManeuverAutomaton, atomic_edges, compose, outcomes, successors  # noqa: F401
from .product import ProductAutomaton, build_pa, finals  # noqa: F401
from .planner import Policy, check_policy, load_policy, save_policy, solve, value_iteration  # noqa: F401
from .runtime import Plan, TrajectoryLog, make_plan, run  # noqa: F401
