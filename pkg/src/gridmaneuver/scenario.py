"""Scenario parsing, validation, and joint-workspace labeling.

A scenario document is a JSON object with top-level keys ``grid``,
``vehicles``, ``obstacles``, ``goals``, ``costs``, ``numerics`` and
``primitive_mode``.  Parsing normalizes it into an immutable
:class:`Scenario`; everything downstream (workspace graph, automata,
planner, simulator) reads only the normalized form.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import math
from dataclasses import dataclass
from typing import Iterator

from .errors import ScenarioError

Cell = tuple[int, ...]

PRIMITIVE_MODES = ("ND", "D")
COST_VARIANTS = ("uniform", "moving_coords")


@dataclass(frozen=True)
class Scenario:
    """Normalized problem description for one reach-avoid task.

    Per-vehicle fields describe the shared workspace copy (length
    ``outputs_per_vehicle``); joint quantities of length ``p`` are exposed
    as derived properties.  ``u_max`` is stored per joint output so
    vehicles may have different actuation limits.
    """

    outputs_per_vehicle: int
    vehicles: int
    vehicle_extent: tuple[int, ...]
    box_lengths: tuple[float, ...]
    u_max: tuple[float, ...]
    obstacles: frozenset[Cell]
    goals_per_vehicle: tuple[frozenset[Cell], ...]
    joint_goals: frozenset[Cell] | None
    collision_margin: int
    edge_cost: float
    terminal_cost: float
    cost_variant: str
    final_any_primitive: bool
    primitive_mode: str
    step: float | None
    event_tol: float | None
    horizon: float | None
    u_clip: float | None

    @property
    def p(self) -> int:
        return self.outputs_per_vehicle * self.vehicles

    @property
    def grid_extent(self) -> tuple[int, ...]:
        return self.vehicle_extent * self.vehicles

    @property
    def joint_box_lengths(self) -> tuple[float, ...]:
        return self.box_lengths * self.vehicles

    @property
    def max_speeds(self) -> tuple[float, ...]:
        d = self.joint_box_lengths
        return tuple(math.sqrt(d[i] * self.u_max[i]) for i in range(self.p))

    @property
    def time_constant(self) -> float:
        """Natural time scale sqrt(d_min / u_max)."""
        return math.sqrt(min(self.joint_box_lengths) / max(self.u_max))

    @property
    def step_size(self) -> float:
        return self.step if self.step is not None else 0.005 * self.time_constant

    @property
    def event_tolerance(self) -> float:
        if self.event_tol is not None:
            return self.event_tol
        return 1e-6 * min(self.joint_box_lengths)

    def vehicle_cell(self, cell: Cell, vehicle: int) -> Cell:
        k = self.outputs_per_vehicle
        return cell[vehicle * k : (vehicle + 1) * k]


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ScenarioError(msg)


def _as_cell(value, dims: int, what: str) -> Cell:
    _require(
        isinstance(value, (list, tuple)) and len(value) == dims,
        f"{what} must be a list of {dims} integers, got {value!r}",
    )
    for v in value:
        _require(isinstance(v, int) and not isinstance(v, bool), f"{what} has non-integer index {v!r}")
    return tuple(value)


def _positive_floats(value, count: int, what: str) -> tuple[float, ...]:
    _require(isinstance(value, (list, tuple)), f"{what} must be an array")
    out = []
    for v in value:
        _require(isinstance(v, (int, float)) and not isinstance(v, bool) and v > 0, f"{what} entries must be positive numbers, got {v!r}")
        out.append(float(v))
    _require(len(out) == count, f"{what} must have length {count}, got {len(out)}")
    return tuple(out)


def _check_in_grid(cell: Cell, extent: tuple[int, ...], what: str) -> None:
    for idx, n in zip(cell, extent):
        _require(0 <= idx < n, f"{what} {cell} lies outside the grid extent {list(extent)}")


def parse_scenario(text: str) -> Scenario:
    """Parse and validate a scenario document.

    Returns the normalized :class:`Scenario` with all defaults filled in.
    Raises :class:`ScenarioError` with a position annotation for syntax
    problems and a descriptive message for semantic ones.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(
            f"scenario syntax error at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    _require(isinstance(doc, dict), "scenario document must be a JSON object")

    known = {"grid", "vehicles", "obstacles", "goals", "costs", "numerics", "primitive_mode"}
    unknown = set(doc) - known
    _require(not unknown, f"unknown top-level keys: {sorted(unknown)}")

    grid = doc.get("grid")
    _require(isinstance(grid, dict) and "extent" in grid, "missing grid.extent")
    extent_raw = grid["extent"]
    _require(
        isinstance(extent_raw, (list, tuple)) and len(extent_raw) >= 1,
        "grid.extent must be a nonempty array",
    )
    for n in extent_raw:
        _require(isinstance(n, int) and not isinstance(n, bool) and n >= 1, f"grid extent entries must be positive integers, got {n!r}")
    extent = tuple(extent_raw)
    opv = len(extent)

    veh = doc.get("vehicles", {})
    _require(isinstance(veh, dict), "vehicles must be an object")
    count = veh.get("count", 1)
    _require(isinstance(count, int) and count >= 1, "vehicles.count must be a positive integer")
    declared_opv = veh.get("outputs_per_vehicle", opv)
    _require(
        declared_opv == opv,
        f"vehicles.outputs_per_vehicle ({declared_opv}) must match len(grid.extent) ({opv})",
    )
    p = opv * count

    box_lengths = _positive_floats(grid.get("box_lengths", [1.0] * opv), opv, "grid.box_lengths")

    u_raw = veh.get("u_max", [1.0] * opv)
    _require(isinstance(u_raw, (list, tuple)) and len(u_raw) in (opv, p), f"vehicles.u_max must have length {opv} or {p}")
    if len(u_raw) == opv:
        u_raw = list(u_raw) * count
    u_max = _positive_floats(u_raw, p, "vehicles.u_max")

    margin = veh.get("collision_margin", 0)
    _require(isinstance(margin, int) and not isinstance(margin, bool) and margin >= 0, "collision_margin must be a nonnegative integer")

    obstacles_raw = doc.get("obstacles", [])
    _require(isinstance(obstacles_raw, list), "obstacles must be an array of cells")
    obstacles = frozenset(_as_cell(c, opv, "obstacle cell") for c in obstacles_raw)
    for c in obstacles:
        _check_in_grid(c, extent, "obstacle cell")

    goals_raw = doc.get("goals")
    _require(goals_raw is not None, "missing goals")
    joint_goals: frozenset[Cell] | None = None
    if isinstance(goals_raw, dict):
        per_vehicle_raw = goals_raw.get("per_vehicle", [])
        joint_raw = goals_raw.get("joint")
        if joint_raw is not None:
            _require(isinstance(joint_raw, list) and joint_raw, "goals.joint must be a nonempty array")
            joint_goals = frozenset(_as_cell(c, p, "joint goal cell") for c in joint_raw)
            for c in joint_goals:
                _check_in_grid(c, extent * count, "joint goal cell")
    else:
        per_vehicle_raw = goals_raw
    _require(isinstance(per_vehicle_raw, list), "goals.per_vehicle must be an array")
    if per_vehicle_raw and isinstance(per_vehicle_raw[0], (list, tuple)) and per_vehicle_raw[0] and isinstance(per_vehicle_raw[0][0], int):
        # flat list of cells: shorthand for one goal set shared by all vehicles
        per_vehicle_raw = [per_vehicle_raw]
    _require(
        len(per_vehicle_raw) in (1, count) or (joint_goals is not None and not per_vehicle_raw),
        f"goals.per_vehicle must list 1 or {count} goal sets",
    )
    if len(per_vehicle_raw) == 1 and count > 1:
        per_vehicle_raw = per_vehicle_raw * count
    goals_per_vehicle = tuple(
        frozenset(_as_cell(c, opv, "goal cell") for c in goal_set) for goal_set in per_vehicle_raw
    )
    if joint_goals is not None and not goals_per_vehicle:
        # project explicit joint goals so per-vehicle views stay usable
        goals_per_vehicle = tuple(
            frozenset(c[k * opv : (k + 1) * opv] for c in joint_goals) for k in range(count)
        )
    _require(
        bool(goals_per_vehicle) and all(goals_per_vehicle),
        "every vehicle needs a nonempty goal set (or provide goals.joint)",
    )
    for goal_set in goals_per_vehicle:
        for c in goal_set:
            _check_in_grid(c, extent, "goal cell")
            _require(c not in obstacles, f"goal cell {c} coincides with an obstacle cell")

    costs = doc.get("costs", {})
    _require(isinstance(costs, dict), "costs must be an object")
    edge_cost = float(costs.get("edge_cost", 1.0))
    terminal_cost = float(costs.get("terminal_cost", 0.0))
    _require(edge_cost >= 0, "edge_cost must be nonnegative")
    _require(terminal_cost >= 0, "terminal_cost must be nonnegative")
    variant = costs.get("variant", "uniform")
    _require(variant in COST_VARIANTS, f"costs.variant must be one of {COST_VARIANTS}")
    final_any = bool(costs.get("final_any_primitive", False))

    numerics = doc.get("numerics", {})
    _require(isinstance(numerics, dict), "numerics must be an object")

    def _opt_pos(key: str) -> float | None:
        v = numerics.get(key)
        if v is None:
            return None
        _require(isinstance(v, (int, float)) and v > 0, f"numerics.{key} must be positive when given")
        return float(v)

    mode = doc.get("primitive_mode", "ND")
    _require(mode in PRIMITIVE_MODES, f"primitive_mode must be one of {PRIMITIVE_MODES}")

    return Scenario(
        outputs_per_vehicle=opv,
        vehicles=count,
        vehicle_extent=extent,
        box_lengths=box_lengths,
        u_max=u_max,
        obstacles=obstacles,
        goals_per_vehicle=goals_per_vehicle,
        joint_goals=joint_goals,
        collision_margin=margin,
        edge_cost=edge_cost,
        terminal_cost=terminal_cost,
        cost_variant=variant,
        final_any_primitive=final_any,
        primitive_mode=mode,
        step=_opt_pos("step"),
        event_tol=_opt_pos("event_tol"),
        horizon=_opt_pos("horizon"),
        u_clip=_opt_pos("u_clip"),
    )


def load_scenario(path: str) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_scenario(fh.read())


def scenario_to_dict(s: Scenario) -> dict:
    """Canonical (normalized, deterministically ordered) document form."""
    return {
        "grid": {"extent": list(s.vehicle_extent), "box_lengths": list(s.box_lengths)},
        "vehicles": {
            "count": s.vehicles,
            "outputs_per_vehicle": s.outputs_per_vehicle,
            "u_max": list(s.u_max),
            "collision_margin": s.collision_margin,
        },
        "obstacles": sorted(list(c) for c in s.obstacles),
        "goals": {
            "per_vehicle": [sorted(list(c) for c in goal_set) for goal_set in s.goals_per_vehicle],
            "joint": None if s.joint_goals is None else sorted(list(c) for c in s.joint_goals),
        },
        "costs": {
            "edge_cost": s.edge_cost,
            "terminal_cost": s.terminal_cost,
            "variant": s.cost_variant,
            "final_any_primitive": s.final_any_primitive,
        },
        "numerics": {"step": s.step, "event_tol": s.event_tol, "horizon": s.horizon, "u_clip": s.u_clip},
        "primitive_mode": s.primitive_mode,
    }


def scenario_to_json(s: Scenario) -> str:
    return json.dumps(scenario_to_dict(s), indent=2, sort_keys=True) + "\n"


def scenario_hash(s: Scenario) -> str:
    canonical = json.dumps(scenario_to_dict(s), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def joint_cells(s: Scenario) -> Iterator[Cell]:
    """All joint cells in canonical order (first axis varies fastest)."""
    for rev in itertools.product(*(range(n) for n in reversed(s.grid_extent))):
        yield rev[::-1]


def cell_blocked(s: Scenario, cell: Cell) -> bool:
    """Joint obstacle labeling.

    A joint cell is blocked iff some vehicle sits on a physical obstacle
    or two vehicles' sub-cells are within Chebyshev distance
    ``collision_margin`` of each other (margin 0: same cell only).
    """
    subs = [s.vehicle_cell(cell, k) for k in range(s.vehicles)]
    for sub in subs:
        if sub in s.obstacles:
            return True
    m = s.collision_margin
    for a in range(s.vehicles):
        for b in range(a + 1, s.vehicles):
            if max(abs(x - y) for x, y in zip(subs[a], subs[b])) <= m:
                return True
    return False


def cell_is_goal(s: Scenario, cell: Cell) -> bool:
    """Joint goal labeling: explicit joint goals, else the per-vehicle product."""
    if s.joint_goals is not None:
        return cell in s.joint_goals
    return all(s.vehicle_cell(cell, k) in s.goals_per_vehicle[k] for k in range(s.vehicles))
