from __future__ import annotations

import itertools
import json
from pathlib import Path

import pytest

from gridmaneuver.errors import EmptyWorkspaceError, UnreachableGoalError
from gridmaneuver.scenario import parse_scenario

SCENARIO_DIR = Path(__file__).resolve().parents[1] / "scenarios"


def scenario_text(name: str) -> str:
    return (SCENARIO_DIR / name).read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def basic4x4_text() -> str:
    return scenario_text("basic4x4.json")


@pytest.fixture(scope="session")
def basic4x4(basic4x4_text):
    return parse_scenario(basic4x4_text)


@pytest.fixture(scope="session")
def corridor():
    return parse_scenario(scenario_text("corridor1d.json"))


@pytest.fixture(scope="session")
def swap():
    return parse_scenario(scenario_text("swap5x6.json"))


def make_scenario(
    extent,
    obstacles=(),
    goals=((0,) * 1,),
    vehicles=1,
    box_lengths=None,
    u_max=None,
    margin=0,
    mode="ND",
    edge_cost=1.0,
    terminal_cost=0.0,
    variant="uniform",
    **numerics,
):
    opv = len(extent)
    doc = {
        "grid": {
            "extent": list(extent),
            "box_lengths": list(box_lengths) if box_lengths else [1.0] * opv,
        },
        "vehicles": {
            "count": vehicles,
            "outputs_per_vehicle": opv,
            "u_max": list(u_max) if u_max else [1.0] * opv,
            "collision_margin": margin,
        },
        "obstacles": [list(c) for c in obstacles],
        "goals": [[list(c) for c in goals]],
        "costs": {"edge_cost": edge_cost, "terminal_cost": terminal_cost, "variant": variant},
        "numerics": numerics,
        "primitive_mode": mode,
    }
    return parse_scenario(json.dumps(doc))


def random_scenario(rng, max_p=3, max_grid=4, density=0.3, mode="ND", vehicles_allowed=True):
    """Rejection-sample a buildable random scenario (free goal exists)."""
    from gridmaneuver.workspace import build_ots

    while True:
        if vehicles_allowed and rng.random() < 0.25:
            vehicles, opv = 2, 1
        else:
            vehicles, opv = 1, int(rng.integers(1, max_p + 1))
        extent = [int(rng.integers(2, max_grid + 1)) for _ in range(opv)]
        cells = list(itertools.product(*(range(n) for n in extent)))
        rng.shuffle(cells)
        n_obs = int(density * len(cells) * rng.random())
        obstacles = cells[:n_obs]
        free = cells[n_obs:]
        goal = free[int(rng.integers(len(free)))]
        scenario = make_scenario(
            extent, obstacles=obstacles, goals=[goal], vehicles=vehicles, mode=mode
        )
        try:
            build_ots(scenario)
        except (EmptyWorkspaceError, UnreachableGoalError):
            continue
        return scenario
