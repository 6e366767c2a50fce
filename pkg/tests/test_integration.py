from __future__ import annotations

import dataclasses
import json

import numpy as np
import pytest

from gridmaneuver.planner import check_policy
from gridmaneuver.runtime import make_plan, random_start, run
from gridmaneuver.scenario import cell_blocked, parse_scenario

from conftest import make_scenario


def test_d_mode_end_to_end(basic4x4):
    scenario = dataclasses.replace(basic4x4, primitive_mode="D")
    plan = make_plan(scenario)
    assert plan.ma.n_primitives == 5
    assert check_policy(plan.pa, plan.policy).certified
    log = run(plan, [0.5, 0.5])
    assert log.status == "reached"
    # deterministic primitives move one coordinate at a time
    for _t, _y, _v, _box, prim, _e, _u in log.samples:
        assert sum(1 for c in prim if c != "H") <= 1


def test_collision_margin_planning_end_to_end():
    s = parse_scenario(
        json.dumps(
            {
                "grid": {"extent": [4, 4]},
                "vehicles": {"count": 2, "collision_margin": 1},
                "goals": {"per_vehicle": [[[3, 3]], [[0, 0]]]},
                "primitive_mode": "ND",
            }
        )
    )
    plan = make_plan(s)
    log = run(plan, [0.5, 0.5, 3.5, 3.5])
    assert log.status == "reached"
    for row in log.samples:
        a, b = row[3][:2], row[3][2:]
        assert max(abs(x - y) for x, y in zip(a, b)) > 1, "margin violated"
        assert not cell_blocked(s, row[3])


def test_scenario_horizon_override(corridor):
    tight = dataclasses.replace(corridor, horizon=0.5)
    plan = make_plan(tight)
    log = run(plan, [0.5])
    assert log.status == "timeout"
    assert log.exit_code == 2
    assert log.samples[-1][0] == pytest.approx(0.5, abs=1e-9)


def test_scenario_step_override(corridor):
    coarse = dataclasses.replace(corridor, step=0.05)
    plan = make_plan(coarse)
    log = run(plan, [0.5])
    assert log.status == "reached"
    t0, t1 = log.samples[0][0], log.samples[1][0]
    assert t1 - t0 == pytest.approx(0.05)


def test_moving_coords_cost_end_to_end(basic4x4):
    scenario = dataclasses.replace(basic4x4, cost_variant="moving_coords")
    plan = make_plan(scenario)
    assert check_policy(plan.pa, plan.policy).certified
    rng = np.random.default_rng(8)
    y, v = random_start(plan, rng)
    log = run(plan, y, v)
    assert log.status == "reached"


def test_terminal_cost_end_to_end():
    s = make_scenario([3], goals=[(2,)], terminal_cost=1.5)
    plan = make_plan(s)
    log = run(plan, [0.5])
    assert log.status == "reached"
