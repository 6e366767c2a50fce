from __future__ import annotations

import dataclasses

import numpy as np
import pytest

from gridmaneuver.errors import UnreachableGoalError
from gridmaneuver.maneuver import compose, outcomes
from gridmaneuver.product import build_pa, finals
from gridmaneuver.workspace import build_ots

from conftest import make_scenario, random_scenario


@pytest.fixture(scope="module")
def basic4x4_pa(basic4x4):
    ots = build_ots(basic4x4)
    ma = compose(basic4x4.p, "ND")
    return build_pa(ots, ma, basic4x4)


def test_basic4x4_state_count(basic4x4_pa):
    assert basic4x4_pa.n_states == 15 * 9 == 135


def test_forward_hold_state_has_four_edges(basic4x4_pa):
    pa = basic4x4_pa
    origin = pa.ots.index[(0, 0)]
    fh = pa.ma.index[("F", "H")]
    q = pa.state_index(origin, fh)
    entries = pa.adj[q]
    assert len(entries) == 1
    label, targets = entries[0]
    assert label == (1, 0)
    assert len(targets) == 4
    next_right = pa.ots.index[(1, 0)]
    expected = {
        pa.state_index(next_right, pa.ma.index[m])
        for m in (("H", "H"), ("F", "H"), ("H", "F"), ("F", "F"))
    }
    assert set(targets) == expected


def test_blocked_direction_is_inadmissible(basic4x4_pa):
    pa = basic4x4_pa
    left_of_obstacle = pa.ots.index[(0, 2)]
    fh = pa.ma.index[("F", "H")]
    q = pa.state_index(left_of_obstacle, fh)
    assert not pa.admissible[q]
    assert q not in pa.adj


def test_all_hold_always_admissible(basic4x4_pa):
    pa = basic4x4_pa
    for loc in range(pa.ots.n_locations):
        assert pa.admissible[pa.state_index(loc, pa.ma.all_hold)]


def test_finals_single_goal(basic4x4_pa):
    f = finals(basic4x4_pa)
    assert len(f) == 1
    loc, mi = basic4x4_pa.split(f[0])
    assert basic4x4_pa.ots.cells[loc] == (3, 3)
    assert mi == basic4x4_pa.ma.all_hold


def test_finals_two_goals():
    s = make_scenario([4, 4], goals=[(3, 3), (0, 3)])
    pa = build_pa(build_ots(s), compose(2, "ND"), s)
    assert len(finals(pa)) == 2


def test_goal_with_moving_primitive_not_final(basic4x4_pa):
    pa = basic4x4_pa
    goal_loc = pa.ots.index[(3, 3)]
    q = pa.state_index(goal_loc, pa.ma.index[("F", "H")])
    assert q not in set(pa.final_states)


def test_final_any_primitive_flag(basic4x4):
    literal = dataclasses.replace(basic4x4, final_any_primitive=True)
    pa = build_pa(build_ots(literal), compose(2, "ND"), literal)
    # every admissible primitive on the goal box is final under the flag
    goal_loc = pa.ots.index[(3, 3)]
    admissible_on_goal = sum(
        pa.admissible[pa.state_index(goal_loc, mi)] for mi in range(pa.ma.n_primitives)
    )
    assert len(pa.final_states) == admissible_on_goal > 1


def test_edges_project_to_parents():
    rng = np.random.default_rng(21)
    for _ in range(8):
        s = random_scenario(rng)
        ots = build_ots(s)
        ma = compose(s.p, s.primitive_mode)
        pa = build_pa(ots, ma, s)
        for q, entries in pa.adj.items():
            loc, mi = pa.split(q)
            assert pa.admissible[q]
            for label, targets in entries:
                assert label in ma.outcome_labels[mi]
                tgt_loc = ots.neighbor(loc, label)
                assert isinstance(tgt_loc, int)
                allowed = {tgt_loc * ma.n_primitives + mj for mj in ma.succ[(mi, label)]}
                for t in targets:
                    assert t in allowed
                    assert pa.admissible[t]


def test_admissible_states_have_edge_per_label():
    # the stop-crossed-coordinates successor is always admissible, so no
    # outcome label of an admissible state is ever edgeless
    rng = np.random.default_rng(22)
    for _ in range(10):
        s = random_scenario(rng)
        pa = build_pa(build_ots(s), compose(s.p, s.primitive_mode), s)
        for q, entries in pa.adj.items():
            mi = pa.split(q)[1]
            assert len(entries) == len(pa.ma.outcome_labels[mi])
            for _label, targets in entries:
                assert len(targets) >= 1


def test_no_edge_into_blocked_cells():
    from gridmaneuver.scenario import cell_blocked

    rng = np.random.default_rng(23)
    for _ in range(6):
        s = random_scenario(rng)
        pa = build_pa(build_ots(s), compose(s.p, s.primitive_mode), s)
        for q, entries in pa.adj.items():
            for _label, targets in entries:
                for t in targets:
                    cell = pa.ots.cells[pa.split(t)[0]]
                    assert not cell_blocked(s, cell)


def test_moving_coords_cost_variant():
    s = make_scenario([3], goals=[(2,)], variant="moving_coords")
    pa = build_pa(build_ots(s), compose(1, "ND"), s)
    assert pa.prim_cost[pa.ma.index[("H",)]] == 0.0
    assert pa.prim_cost[pa.ma.index[("F",)]] == 1.0


def test_unreachable_finals_raise(basic4x4):
    pa = build_pa(build_ots(basic4x4), compose(2, "ND"), basic4x4)
    pa.final_states = ()
    with pytest.raises(UnreachableGoalError):
        finals(pa)


def test_stats_shape(basic4x4_pa):
    stats = basic4x4_pa.stats()
    assert stats["states"] == 135
    assert stats["admissible"] <= stats["states"]
    assert stats["finals"] == 1
    assert stats["edges"] == basic4x4_pa.edge_count
    assert stats["build_seconds"] >= 0


def test_outcome_free_function_matches_ma(basic4x4_pa):
    ma = basic4x4_pa.ma
    for mi, m in enumerate(ma.primitives):
        assert ma.outcome_labels[mi] == outcomes(m)
