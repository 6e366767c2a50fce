"""Workspace graph: free joint cells, face labels, and neighbor edges.

Faces of a box are identified by labels in {-1, 0, +1}^p (one component
per joint output).  An edge (l, label, l') says the two free cells share
the face reached by offsetting l componentwise by the label.  Labels of
every dimension down to single vertices are included, so simultaneous
crossings (corner exits) are first-class edges.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

from .errors import EmptyWorkspaceError, OutOfWorkspaceError, UnreachableGoalError
from .scenario import Cell, Scenario, cell_blocked, cell_is_goal, joint_cells

Label = tuple[int, ...]

OUT_OF_BOUNDS = "out-of-bounds"
OBSTACLE = "obstacle"

_LABEL_CHARS = {-1: "-", 0: "0", 1: "+"}
_CHAR_LABELS = {"-": -1, "0": 0, "+": 1}


def all_labels(p: int) -> tuple[Label, ...]:
    """Every face label with at least one non-zero component, fixed order."""
    return tuple(
        lab for lab in itertools.product((-1, 0, 1), repeat=p) if any(lab)
    )


def label_to_str(label: Label) -> str:
    return "".join(_LABEL_CHARS[c] for c in label)


def parse_label(text: str) -> Label:
    try:
        return tuple(_CHAR_LABELS[ch] for ch in text)
    except KeyError as exc:
        raise ValueError(f"bad face label {text!r}") from exc


@dataclass
class WorkspaceGraph:
    """Finite abstraction of the gridded joint output space."""

    scenario: Scenario
    cells: list[Cell]
    index: dict[Cell, int]
    goal_locations: frozenset[int]
    edges: list[tuple[tuple[Label, int], ...]] = field(default_factory=list)

    @property
    def n_locations(self) -> int:
        return len(self.cells)

    @property
    def edge_count(self) -> int:
        return sum(len(e) for e in self.edges)

    def neighbor(self, loc: int, label: Label) -> int | str:
        """Location across the given face, or the blocking reason."""
        cell = self.cells[loc]
        target = tuple(c + o for c, o in zip(cell, label))
        for idx, n in zip(target, self.scenario.grid_extent):
            if idx < 0 or idx >= n:
                return OUT_OF_BOUNDS
        found = self.index.get(target)
        return OBSTACLE if found is None else found

    def edge_map(self, loc: int) -> dict[Label, int]:
        return dict(self.edges[loc])


def build_ots(scenario: Scenario) -> WorkspaceGraph:
    """Build the workspace graph over all free joint cells.

    Locations are the joint cells that pass the obstacle labeling, in
    canonical cell order; edges follow the face-offset rule for every
    label with a non-zero component.
    """
    cells = [c for c in joint_cells(scenario) if not cell_blocked(scenario, c)]
    if not cells:
        raise EmptyWorkspaceError("every joint cell is blocked")
    index = {c: i for i, c in enumerate(cells)}
    goal_locations = frozenset(i for i, c in enumerate(cells) if cell_is_goal(scenario, c))
    if not goal_locations:
        raise UnreachableGoalError("no free joint cell is labeled as a goal")

    graph = WorkspaceGraph(scenario, cells, index, goal_locations)
    labels = all_labels(scenario.p)
    extent = scenario.grid_extent
    for cell in cells:
        out = []
        for label in labels:
            target = tuple(c + o for c, o in zip(cell, label))
            ok = True
            for idx, n in zip(target, extent):
                if idx < 0 or idx >= n:
                    ok = False
                    break
            if not ok:
                continue
            tgt_loc = index.get(target)
            if tgt_loc is not None:
                out.append((label, tgt_loc))
        graph.edges.append(tuple(out))
    return graph


def global_to_cell(scenario: Scenario, y) -> tuple[Cell, tuple[float, ...]]:
    """Map a global output point to its joint cell and local coordinates.

    Points exactly on a shared face belong to the lower-index cell with
    local coordinate equal to the box length (deterministic face
    ownership for event handling).
    """
    cell = []
    local = []
    for value, d, n in zip(y, scenario.joint_box_lengths, scenario.grid_extent):
        if value < 0.0 or value > n * d:
            raise OutOfWorkspaceError(f"point component {value} outside [0, {n * d}]")
        idx = int(math.floor(value / d))
        if idx >= 1 and idx * d >= value:
            idx -= 1
        if idx > n - 1:
            idx = n - 1
        cell.append(idx)
        local.append(value - idx * d)
    return tuple(cell), tuple(local)
