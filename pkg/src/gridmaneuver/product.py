"""Product automaton: the workspace graph synchronized with the maneuver
automaton.

A product state is a free joint cell equipped with a composed primitive.
It is admissible when every face its primitive can reach leads to a free
cell; inadmissible states are kept (dense indexing) but carry no edges,
so the planner assigns them infinite value.  An edge exists per shared
face label whenever both parents have the corresponding edge and both
endpoint states are admissible.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .errors import UnreachableGoalError
from .maneuver import ManeuverAutomaton, moving_coords
from .scenario import Scenario
from .workspace import Label, WorkspaceGraph


@dataclass
class ProductAutomaton:
    ots: WorkspaceGraph
    ma: ManeuverAutomaton
    admissible: list[bool]
    final_states: tuple[int, ...]
    adj: dict[int, tuple[tuple[Label, tuple[int, ...]], ...]] = field(default_factory=dict)
    prim_cost: tuple[float, ...] = ()
    terminal_cost: float = 0.0
    build_seconds: float = 0.0

    @property
    def n_primitives(self) -> int:
        return self.ma.n_primitives

    @property
    def n_states(self) -> int:
        return self.ots.n_locations * self.ma.n_primitives

    def state_index(self, loc: int, prim: int) -> int:
        return loc * self.ma.n_primitives + prim

    def split(self, state: int) -> tuple[int, int]:
        return divmod(state, self.ma.n_primitives)

    @property
    def edge_count(self) -> int:
        return sum(len(t) for entries in self.adj.values() for _, t in entries)

    @property
    def admissible_count(self) -> int:
        return sum(self.admissible)

    def stats(self) -> dict[str, float]:
        return {
            "states": self.n_states,
            "edges": self.edge_count,
            "admissible": self.admissible_count,
            "finals": len(self.final_states),
            "build_seconds": self.build_seconds,
        }


def build_pa(ots: WorkspaceGraph, ma: ManeuverAutomaton, scenario: Scenario | None = None) -> ProductAutomaton:
    """Assemble the product automaton with admissibility filtering and costs."""
    t0 = time.perf_counter()
    s = scenario if scenario is not None else ots.scenario
    n_prims = ma.n_primitives

    admissible: list[bool] = [False] * (ots.n_locations * n_prims)
    edge_maps = [ots.edge_map(loc) for loc in range(ots.n_locations)]
    for loc in range(ots.n_locations):
        free = edge_maps[loc]
        base = loc * n_prims
        for mi in range(n_prims):
            admissible[base + mi] = all(lab in free for lab in ma.outcome_labels[mi])

    if s.cost_variant == "moving_coords":
        prim_cost = tuple(float(len(moving_coords(m))) for m in ma.primitives)
    else:
        prim_cost = (float(s.edge_cost),) * n_prims

    adj: dict[int, tuple[tuple[Label, tuple[int, ...]], ...]] = {}
    for loc in range(ots.n_locations):
        free = edge_maps[loc]
        base = loc * n_prims
        for mi in range(n_prims):
            q = base + mi
            if not admissible[q] or not ma.outcome_labels[mi]:
                continue
            entries = []
            for lab in ma.outcome_labels[mi]:
                tgt_base = free[lab] * n_prims
                targets = tuple(
                    tgt_base + mj for mj in ma.succ[(mi, lab)] if admissible[tgt_base + mj]
                )
                entries.append((lab, targets))
            adj[q] = tuple(entries)

    if s.final_any_primitive:
        final_prims = range(n_prims)
    else:
        final_prims = (ma.all_hold,)
    final_states = tuple(
        loc * n_prims + mi
        for loc in sorted(ots.goal_locations)
        for mi in final_prims
        if admissible[loc * n_prims + mi]
    )

    pa = ProductAutomaton(
        ots=ots,
        ma=ma,
        admissible=admissible,
        final_states=final_states,
        adj=adj,
        prim_cost=prim_cost,
        terminal_cost=float(s.terminal_cost),
    )
    pa.build_seconds = time.perf_counter() - t0
    return pa


def finals(pa: ProductAutomaton) -> tuple[int, ...]:
    """Final states (goal location, resting primitive), with terminal cost."""
    if not pa.final_states:
        raise UnreachableGoalError("the product automaton has no final state")
    return pa.final_states
