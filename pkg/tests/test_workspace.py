from __future__ import annotations

import itertools

import numpy as np
import pytest

from gridmaneuver.errors import EmptyWorkspaceError, OutOfWorkspaceError, UnreachableGoalError
from gridmaneuver.scenario import cell_blocked, joint_cells
from gridmaneuver.workspace import (
    OBSTACLE,
    OUT_OF_BOUNDS,
    all_labels,
    build_ots,
    global_to_cell,
    label_to_str,
    parse_label,
)

from conftest import make_scenario, random_scenario


def brute_force_edges(scenario):
    """Independent edge enumeration straight from the offset rule."""
    free = [c for c in joint_cells(scenario) if not cell_blocked(scenario, c)]
    free_set = set(free)
    edges = set()
    for cell in free:
        for label in itertools.product((-1, 0, 1), repeat=scenario.p):
            if not any(label):
                continue
            target = tuple(c + o for c, o in zip(cell, label))
            if all(0 <= t < n for t, n in zip(target, scenario.grid_extent)) and target in free_set:
                edges.add((cell, label, target))
    return edges


def test_basic4x4_locations(basic4x4):
    ots = build_ots(basic4x4)
    assert ots.n_locations == 15


def test_single_box_grid():
    ots = build_ots(make_scenario([1], goals=[(0,)]))
    assert ots.n_locations == 1
    assert ots.edge_count == 0


def test_2x2_edge_count_brute_force():
    s = make_scenario([2, 2], goals=[(1, 1)])
    ots = build_ots(s)
    assert ots.n_locations == 4
    oracle = brute_force_edges(s)
    assert ots.edge_count == len(oracle) == 12
    mine = {
        (ots.cells[loc], label, ots.cells[tgt])
        for loc in range(ots.n_locations)
        for label, tgt in ots.edges[loc]
    }
    assert mine == oracle


def test_edges_match_brute_force_on_random_scenarios():
    rng = np.random.default_rng(11)
    for _ in range(12):
        s = random_scenario(rng)
        ots = build_ots(s)
        mine = {
            (ots.cells[loc], label, ots.cells[tgt])
            for loc in range(ots.n_locations)
            for label, tgt in ots.edges[loc]
        }
        assert mine == brute_force_edges(s)


def test_neighbor_values(basic4x4):
    ots = build_ots(basic4x4)
    corner = ots.index[(0, 0)]
    assert ots.neighbor(corner, (-1, -1)) == OUT_OF_BOUNDS
    left_of_obstacle = ots.index[(0, 2)]
    assert ots.neighbor(left_of_obstacle, (1, 0)) == OBSTACLE
    # the diagonally labeled edge from the cell above-right of the origin
    diag = ots.index[(1, 1)]
    assert diag == 5
    assert ots.neighbor(diag, (-1, -1)) == ots.index[(0, 0)] == 0


def test_inverse_symmetry():
    rng = np.random.default_rng(3)
    for _ in range(8):
        s = random_scenario(rng)
        ots = build_ots(s)
        edges = {
            (loc, label, tgt)
            for loc in range(ots.n_locations)
            for label, tgt in ots.edges[loc]
        }
        for loc, label, tgt in edges:
            flipped = tuple(-c for c in label)
            assert (tgt, flipped, loc) in edges


def test_degree_bound_and_targets(basic4x4):
    ots = build_ots(basic4x4)
    bound = 3 ** basic4x4.p - 1
    for loc in range(ots.n_locations):
        assert len(ots.edges[loc]) <= bound
        for label, tgt in ots.edges[loc]:
            assert ots.neighbor(loc, label) == tgt
    # an interior location with all free neighbors attains the bound
    open_grid = build_ots(make_scenario([3, 3], goals=[(2, 2)]))
    interior = open_grid.index[(1, 1)]
    assert len(open_grid.edges[interior]) == bound


def test_no_goal_raises():
    with pytest.raises(UnreachableGoalError):
        # both vehicles share the single goal cell: joint goal is a collision
        build_ots(make_scenario([2], vehicles=2, goals=[(1,)]))


def test_empty_workspace_raises():
    with pytest.raises(EmptyWorkspaceError):
        build_ots(make_scenario([1], vehicles=2, goals=[(0,)]))


def test_global_to_cell_origin(basic4x4):
    cell, local = global_to_cell(basic4x4, (0.0, 0.0))
    assert cell == (0, 0)
    assert local == (0.0, 0.0)


def test_global_to_cell_boundary_rule():
    s = make_scenario([4, 4], box_lengths=[1.0, 0.75], goals=[(0, 0)])
    cell, local = global_to_cell(s, (1.5, 0.75))
    assert cell == (1, 0)
    assert local == pytest.approx((0.5, 0.75))


def test_global_to_cell_far_corner(basic4x4):
    cell, local = global_to_cell(basic4x4, (4.0, 4.0))
    assert cell == (3, 3)
    assert local == (1.0, 1.0)


def test_global_to_cell_outside(basic4x4):
    with pytest.raises(OutOfWorkspaceError):
        global_to_cell(basic4x4, (4.5, 1.0))
    with pytest.raises(OutOfWorkspaceError):
        global_to_cell(basic4x4, (-0.1, 1.0))


def test_label_text_roundtrip():
    for label in all_labels(3):
        assert parse_label(label_to_str(label)) == label
    assert label_to_str((1, 0, -1)) == "+0-"
