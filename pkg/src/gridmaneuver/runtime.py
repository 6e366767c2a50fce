"""Closed-loop hybrid execution of a planned policy.

Each output coordinate runs its engaged primitive's affine feedback over
the double integrator; a coordinate whose commanded primitive does not
yet admit the state runs Hold until it does (deferred engagement).  The
loop integrates with a fixed-step classical 4-stage scheme, locates face
crossings by bisection to the scenario's position tolerance, forms joint
face labels (simultaneous crossings become corner labels), applies the
policy at each crossing, and falls back to value-guided recovery when a
disturbance pushes the state off-plan.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

from .errors import OutOfWorkspaceError, StartStateError, UnreachableGoalError
from .maneuver import ManeuverAutomaton, compose, moving_coords, primitive_to_str
from .planner import INF, Policy, solve
from .primitives import AtomicParams, atomic_primitive, in_invariant, sample_invariant
from .product import ProductAutomaton, build_pa
from .scenario import Cell, Scenario
from .workspace import Label, WorkspaceGraph, build_ots, global_to_cell, label_to_str

REACH_RADIUS_FACTOR = 0.05
HORIZON_FACTOR = 20.0
BISECT_MAX_ITER = 60

EXIT_REACHED = 0
EXIT_TIMEOUT = 2
EXIT_VIOLATION = 3
EXIT_FAILURE = 4

_STATUS_CODES = {
    "reached": EXIT_REACHED,
    "timeout": EXIT_TIMEOUT,
    "violation": EXIT_VIOLATION,
    "numeric-failure": EXIT_FAILURE,
    "stuck": EXIT_FAILURE,
}


@dataclass(frozen=True)
class Disturbance:
    """Piecewise-constant acceleration offset on one joint output."""

    start: float
    end: float
    output: int
    accel: float

    def __post_init__(self):
        if self.start >= self.end:
            raise ValueError("disturbance interval must have start < end")
        if self.output < 0:
            raise ValueError("disturbance output index must be nonnegative")


def parse_disturbance(text: str) -> Disturbance:
    """Parse 'start:end:output:accel', e.g. '1.0:6.0:2:-0.25'."""
    parts = text.split(":")
    if len(parts) != 4:
        raise ValueError(f"disturbance spec {text!r} is not start:end:output:accel")
    return Disturbance(float(parts[0]), float(parts[1]), int(parts[2]), float(parts[3]))


@dataclass(frozen=True)
class HybridState:
    """Global continuous state plus the discrete execution context."""

    t: float
    y: tuple[float, ...]
    v: tuple[float, ...]
    box: Cell
    primitive: tuple[str, ...]
    engaged: tuple[bool, ...]


@dataclass
class TrajectoryLog:
    """Sampled rows, discrete events, and the run verdict."""

    samples: list[tuple] = field(default_factory=list)
    events: list[dict] = field(default_factory=list)
    violations: list[str] = field(default_factory=list)
    reached: bool = False
    t_reach: float | None = None
    status: str = "timeout"

    @property
    def exit_code(self) -> int:
        return _STATUS_CODES[self.status]

    def box_sequence(self) -> list[Cell]:
        seq: list[Cell] = []
        for row in self.samples:
            box = row[3]
            if not seq or seq[-1] != box:
                seq.append(box)
        return seq


@dataclass
class Plan:
    """Everything the simulator needs: scenario, abstractions, values, policy."""

    scenario: Scenario
    ots: WorkspaceGraph
    ma: ManeuverAutomaton
    pa: ProductAutomaton
    values: list[float]
    policy: Policy


def make_plan(scenario: Scenario) -> Plan:
    """Run the full offline pipeline on a scenario."""
    ots = build_ots(scenario)
    ma = compose(scenario.p, scenario.primitive_mode)
    pa = build_pa(ots, ma, scenario)
    values, policy = solve(pa)
    return Plan(scenario, ots, ma, pa, values, policy)


@lru_cache(maxsize=64)
def _coord_params(scenario: Scenario) -> tuple[AtomicParams, ...]:
    return tuple(
        AtomicParams(d, u) for d, u in zip(scenario.joint_box_lengths, scenario.u_max)
    )


@lru_cache(maxsize=64)
def _coord_laws(scenario: Scenario) -> dict[str, tuple[tuple[float, float, float], ...]]:
    laws = {}
    for tag in ("H", "F", "B"):
        laws[tag] = tuple(
            (prim.k_pos, prim.k_vel, prim.offset)
            for prim in (atomic_primitive(tag, par) for par in _coord_params(scenario))
        )
    return laws


def _active_wind(disturbances, t: float, p: int) -> tuple[float, ...]:
    w = [0.0] * p
    for d in disturbances:
        if d.start <= t < d.end and d.output < p:
            w[d.output] += d.accel
    return tuple(w)


def _rk4_coord(y, v, kp, kv, c, w, clip, h):
    # closed-loop double integrator: y' = v, v' = sat(kp*y + kv*v + c) + w
    if clip is None:
        a1 = kp * y + kv * v + c + w
        y2, v2 = y + 0.5 * h * v, v + 0.5 * h * a1
        a2 = kp * y2 + kv * v2 + c + w
        y3, v3 = y + 0.5 * h * v2, v + 0.5 * h * a2
        a3 = kp * y3 + kv * v3 + c + w
        y4, v4 = y + h * v3, v + h * a3
        a4 = kp * y4 + kv * v4 + c + w
    else:
        a1 = max(-clip, min(clip, kp * y + kv * v + c)) + w
        y2, v2 = y + 0.5 * h * v, v + 0.5 * h * a1
        a2 = max(-clip, min(clip, kp * y2 + kv * v2 + c)) + w
        y3, v3 = y + 0.5 * h * v2, v + 0.5 * h * a2
        a3 = max(-clip, min(clip, kp * y3 + kv * v3 + c)) + w
        y4, v4 = y + h * v3, v + h * a3
        a4 = max(-clip, min(clip, kp * y4 + kv * v4 + c)) + w
    ny = y + h / 6.0 * (v + 2.0 * v2 + 2.0 * v3 + v4)
    nv = v + h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
    return ny, nv


def _step_all(scenario, y, v, box, primitive, engaged, w, h):
    laws = _coord_laws(scenario)
    d = scenario.joint_box_lengths
    clip = scenario.u_clip
    ny, nv = [], []
    for i in range(scenario.p):
        tag = primitive[i] if engaged[i] else "H"
        kp, kv, off = laws[tag][i]
        c = off - kp * (box[i] * d[i])
        a, b = _rk4_coord(y[i], v[i], kp, kv, c, w[i], clip, h)
        ny.append(a)
        nv.append(b)
    return ny, nv


def control_vector(scenario: Scenario, state: HybridState) -> tuple[float, ...]:
    """Per-output commanded acceleration at the given state."""
    laws = _coord_laws(scenario)
    d = scenario.joint_box_lengths
    clip = scenario.u_clip
    out = []
    for i in range(scenario.p):
        tag = state.primitive[i] if state.engaged[i] else "H"
        kp, kv, off = laws[tag][i]
        u = kp * (state.y[i] - state.box[i] * d[i]) + kv * state.v[i] + off
        if clip is not None:
            u = max(-clip, min(clip, u))
        out.append(u)
    return tuple(out)


def integrate_step(scenario: Scenario, state: HybridState, disturbances=(), h: float | None = None) -> HybridState:
    """One fixed step of the engaged closed-loop dynamics (no event logic)."""
    hh = h if h is not None else scenario.step_size
    w = _active_wind(disturbances, state.t + 0.5 * hh, scenario.p)
    ny, nv = _step_all(scenario, state.y, state.v, state.box, state.primitive, state.engaged, w, hh)
    if not all(map(math.isfinite, ny)) or not all(map(math.isfinite, nv)):
        raise ArithmeticError("non-finite state after integration step")
    return HybridState(state.t + hh, tuple(ny), tuple(nv), state.box, state.primitive, state.engaged)


def _crossing_dirs(scenario, y, box):
    """Per-coordinate strict face passage: +1 above, -1 at/below zero."""
    d = scenario.joint_box_lengths
    dirs = [0] * scenario.p
    for i in range(scenario.p):
        xi = y[i] - box[i] * d[i]
        if xi > d[i]:
            dirs[i] = 1
        elif xi <= 0.0:
            dirs[i] = -1
    return dirs


def detect_event(scenario: Scenario, prev: HybridState, nxt: HybridState, disturbances=()) -> tuple[Label, HybridState] | None:
    """Locate the first face crossing inside one integration step.

    Bisects the step until the worst overshoot is within the position
    tolerance, then labels every coordinate that crossed (or sits within
    tolerance of its engaged primitive's exit face) in the refined step.
    Returns the joint label and the state at the event, or None.
    """
    if not any(_crossing_dirs(scenario, nxt.y, nxt.box)):
        return None
    d = scenario.joint_box_lengths
    eps = scenario.event_tolerance
    h_full = nxt.t - prev.t

    def state_at(dt: float):
        if dt <= 0.0:
            return list(prev.y), list(prev.v)
        w = _active_wind(disturbances, prev.t + 0.5 * dt, scenario.p)
        return _step_all(scenario, prev.y, prev.v, prev.box, prev.primitive, prev.engaged, w, dt)

    def overshoot(y):
        worst = 0.0
        for i in range(scenario.p):
            xi = y[i] - prev.box[i] * d[i]
            if xi > d[i]:
                worst = max(worst, xi - d[i])
            elif xi <= 0.0:
                worst = max(worst, -xi)
        return worst

    lo, hi = 0.0, h_full
    y_hi, v_hi = list(nxt.y), list(nxt.v)
    for _ in range(BISECT_MAX_ITER):
        if overshoot(y_hi) <= eps:
            break
        mid = 0.5 * (lo + hi)
        y_mid, v_mid = state_at(mid)
        if any(_crossing_dirs(scenario, y_mid, prev.box)):
            hi, y_hi, v_hi = mid, y_mid, v_mid
        else:
            lo = mid

    label = [0] * scenario.p
    for i in range(scenario.p):
        xi = y_hi[i] - prev.box[i] * d[i]
        nominal = prev.primitive[i] if prev.engaged[i] else "H"
        if xi > d[i] or (nominal == "F" and xi >= d[i] - eps and v_hi[i] > 0.0):
            label[i] = 1
        elif xi <= 0.0 or (nominal == "B" and xi <= eps and v_hi[i] < 0.0):
            label[i] = -1
    event_state = HybridState(
        prev.t + hi, tuple(y_hi), tuple(v_hi), prev.box, prev.primitive, prev.engaged
    )
    return tuple(label), event_state


def _engage_flags(scenario, primitive, box, y, v, reset_label=None):
    """Engagement per coordinate; crossed coordinates use the reset reading."""
    params = _coord_params(scenario)
    d = scenario.joint_box_lengths
    flags = []
    for i in range(scenario.p):
        xi = y[i] - box[i] * d[i]
        if reset_label is not None and reset_label[i] == 1:
            xi = 0.0
        elif reset_label is not None and reset_label[i] == -1:
            xi = d[i]
        flags.append(in_invariant(primitive[i], params[i], (xi, v[i])))
    return tuple(flags)


def _deferrable(scenario, i, xi, nu) -> bool:
    """A coordinate may wait under Hold if it sits in Hold's bounding box."""
    params = _coord_params(scenario)[i]
    tol = 1e-9
    return (
        -tol * params.box_length <= xi <= (1.0 + tol) * params.box_length
        and abs(nu) <= (1.0 + tol) * params.max_speed
    )


def _candidate_primitives(plan: Plan, loc: int, y, v):
    """Admissible finite-value primitives whose coordinates can engage or
    defer at the given continuous state, best first (dispatch order: value,
    then most moving coordinates, then index)."""
    s = plan.scenario
    params = _coord_params(s)
    d = s.joint_box_lengths
    cell = plan.ots.cells[loc]
    n_prims = plan.ma.n_primitives
    local = [(y[i] - cell[i] * d[i], v[i]) for i in range(s.p)]
    found = []
    for mi in range(n_prims):
        q = loc * n_prims + mi
        if not plan.pa.admissible[q] or plan.values[q] == INF:
            continue
        prim = plan.ma.primitives[mi]
        ok = True
        for i in range(s.p):
            if in_invariant(prim[i], params[i], local[i]):
                continue
            if not _deferrable(s, i, *local[i]):
                ok = False
                break
        if ok:
            found.append((plan.values[q], -len(moving_coords(prim)), mi))
    found.sort()
    return [(value, mi) for value, _, mi in found]


def recover(plan: Plan, state: HybridState) -> HybridState:
    """Re-localize an off-plan state and pick the best admitting primitive.

    Raises OutOfWorkspaceError / UnreachableGoalError when no safe
    continuation exists (hard violation and stuck, respectively).
    """
    s = plan.scenario
    cell, _ = global_to_cell(s, state.y)
    loc = plan.ots.index.get(cell)
    if loc is None:
        raise OutOfWorkspaceError(f"state re-localized into blocked cell {cell}")
    cands = _candidate_primitives(plan, loc, state.y, state.v)
    if not cands:
        raise UnreachableGoalError(f"no finite-value primitive admits the state in cell {cell}")
    mi = cands[0][1]
    prim = plan.ma.primitives[mi]
    engaged = _engage_flags(s, prim, cell, state.y, state.v)
    return HybridState(state.t, state.y, state.v, cell, prim, engaged)


def transition(plan: Plan, state: HybridState, label: Label) -> HybridState:
    """Apply the policy at a face crossing: new box, primitive, engagement.

    Raises KeyError when the realized (state, label) has no policy entry;
    the run loop answers that with ``recover``.
    """
    s = plan.scenario
    new_box = tuple(b + o for b, o in zip(state.box, label))
    loc = plan.ots.index.get(new_box)
    if loc is None:
        raise OutOfWorkspaceError(f"crossing into blocked or out-of-grid cell {new_box}")
    mi_cur = plan.ma.index[state.primitive]
    q = plan.pa.state_index(plan.ots.index[state.box], mi_cur)
    target = plan.policy.choices.get(q, {}).get(label)
    if target is None:
        raise KeyError(f"no policy entry for state {q} under label {label_to_str(label)}")
    new_prim = plan.ma.primitives[plan.pa.split(target)[1]]
    engaged = _engage_flags(s, new_prim, new_box, state.y, state.v, reset_label=label)
    return HybridState(state.t, state.y, state.v, new_box, new_prim, engaged)


def dispatch_state(plan: Plan, position, velocity=None) -> HybridState:
    """Initial hybrid state for a start condition (best engageable primitive)."""
    s = plan.scenario
    y = tuple(float(x) for x in position)
    v = tuple(0.0 for _ in y) if velocity is None else tuple(float(x) for x in velocity)
    if len(y) != s.p or len(v) != s.p:
        raise StartStateError(f"start state must have {s.p} positions and velocities")
    try:
        cell, _ = global_to_cell(s, y)
    except OutOfWorkspaceError as exc:
        raise StartStateError(str(exc)) from exc
    loc = plan.ots.index.get(cell)
    if loc is None:
        raise StartStateError(f"start cell {cell} is blocked")
    cands = _candidate_primitives(plan, loc, y, v)
    if not cands:
        raise StartStateError(f"no finite-value primitive admits the start state in cell {cell}")
    mi = cands[0][1]
    prim = plan.ma.primitives[mi]
    engaged = _engage_flags(s, prim, cell, y, v)
    return HybridState(0.0, y, v, cell, prim, engaged)


def _reach_ok(plan: Plan, state: HybridState) -> bool:
    s = plan.scenario
    loc = plan.ots.index.get(state.box)
    if loc is None or loc not in plan.ots.goal_locations:
        return False
    if any(t != "H" for t in state.primitive) or not all(state.engaged):
        return False
    d = s.joint_box_lengths
    rho = REACH_RADIUS_FACTOR * min(d)
    for i in range(s.p):
        xi = state.y[i] - state.box[i] * d[i]
        tau_i = math.sqrt(d[i] / s.u_max[i])
        if abs(xi - 0.5 * d[i]) > rho or abs(state.v[i]) > rho / tau_i:
            return False
    return True


def auto_horizon(plan: Plan, start: HybridState) -> float:
    """Default simulation horizon scaled by the start state's discrete value."""
    s = plan.scenario
    if s.horizon is not None:
        return s.horizon
    q0 = plan.pa.state_index(plan.ots.index[start.box], plan.ma.index[start.primitive])
    v0 = plan.values[q0]
    basis = v0 if v0 != INF else float(plan.pa.n_states)
    return HORIZON_FACTOR * s.time_constant * max(basis, 1.0)


def _event_row(t, label, box_from, box_to, prim_from, prim_to, engaged, violation):
    return {
        "t": t,
        "label": None if label is None else label_to_str(label),
        "box_from": list(box_from),
        "box_to": list(box_to),
        "prim_from": primitive_to_str(prim_from),
        "prim_to": primitive_to_str(prim_to),
        "deferred": [i for i, e in enumerate(engaged) if not e],
        "violation": violation,
    }


def random_start(plan: Plan, rng) -> tuple[tuple[float, ...], tuple[float, ...]]:
    """Sample a start inside the engaged invariants of its dispatched primitive."""
    s = plan.scenario
    params = _coord_params(s)
    d = s.joint_box_lengths
    for _ in range(10000):
        loc = int(rng.integers(plan.ots.n_locations))
        cell = plan.ots.cells[loc]
        y, v = [], []
        for i in range(s.p):
            xi, nu = sample_invariant("H", params[i], rng, 1)[0]
            y.append(cell[i] * d[i] + float(xi))
            v.append(float(nu))
        try:
            state = dispatch_state(plan, y, v)
        except StartStateError:
            continue
        if state.box == cell and all(state.engaged):
            return tuple(y), tuple(v)
    raise StartStateError("could not sample a valid start state")


def write_trajectory_csv(log: TrajectoryLog, path: str, p: int) -> None:
    """Comma-separated samples with fixed 9-significant-digit formatting."""
    def fmt(x: float) -> str:
        return f"{x:.9g}"

    header = (
        ["t"]
        + [f"y_{i + 1}" for i in range(p)]
        + [f"v_{i + 1}" for i in range(p)]
        + [f"box_{i + 1}" for i in range(p)]
        + ["primitive"]
        + [f"u_{i + 1}" for i in range(p)]
    )
    lines = [",".join(header)]
    for t, y, v, box, prim, _engaged, u in log.samples:
        row = [fmt(t)]
        row += [fmt(x) for x in y]
        row += [fmt(x) for x in v]
        row += [str(b) for b in box]
        row.append(prim)
        row += [fmt(x) for x in u]
        lines.append(",".join(row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def write_events_jsonl(log: TrajectoryLog, path: str) -> None:
    """Line-delimited event records (one JSON object per line)."""
    import json

    with open(path, "w", encoding="utf-8") as fh:
        for ev in log.events:
            fh.write(json.dumps(ev, sort_keys=True) + "\n")


def run(plan: Plan, position, velocity=None, disturbances=(), t_max: float | None = None) -> TrajectoryLog:
    """Simulate the closed loop from a start state until the goal is
    reached and held, the horizon elapses, or the run fails.

    The log records a sample row per integration step and per event, one
    event record per discrete change, and the final verdict with its
    process exit code.
    """
    s = plan.scenario
    for d in disturbances:
        if d.output >= s.p:
            raise ValueError(f"disturbance output {d.output} out of range for p={s.p}")
    log = TrajectoryLog()
    state = dispatch_state(plan, position, velocity)
    horizon = t_max if t_max is not None else auto_horizon(plan, state)
    h = s.step_size
    boundaries = sorted({d.start for d in disturbances} | {d.end for d in disturbances})

    def sample(st: HybridState):
        log.samples.append(
            (st.t, st.y, st.v, st.box, primitive_to_str(st.primitive), st.engaged, control_vector(s, st))
        )

    sample(state)
    max_events = 50 * plan.pa.n_states + 1000
    n_events = 0
    while state.t < horizon - 1e-12:
        step = min(h, horizon - state.t)
        for b in boundaries:
            if state.t < b < state.t + step:
                step = b - state.t
                break
        try:
            nxt = integrate_step(s, state, disturbances, step)
        except ArithmeticError as exc:
            log.violations.append(str(exc))
            log.status = "numeric-failure"
            return log

        event = detect_event(s, state, nxt, disturbances)
        if event is not None:
            label, at = event
            n_events += 1
            if n_events > max_events:
                log.violations.append("event budget exhausted (livelock suspected)")
                log.status = "stuck"
                return log
            prim_from, box_from = at.primitive, at.box
            violation = None
            try:
                state = transition(plan, at, label)
            except (OutOfWorkspaceError, KeyError) as exc:
                if isinstance(exc, OutOfWorkspaceError):
                    log.violations.append(str(exc))
                    log.status = "violation"
                    sample(at)
                    return log
                violation = f"off-plan crossing {label_to_str(label)}"
                log.violations.append(violation)
                try:
                    state = recover(plan, at)
                except OutOfWorkspaceError as exc2:
                    log.violations.append(str(exc2))
                    log.status = "violation"
                    sample(at)
                    return log
                except UnreachableGoalError as exc2:
                    log.violations.append(str(exc2))
                    log.status = "stuck"
                    sample(at)
                    return log
            log.events.append(
                _event_row(state.t, label, box_from, state.box, prim_from, state.primitive, state.engaged, violation)
            )
            sample(state)
        else:
            state = nxt
            if not all(state.engaged):
                params = _coord_params(s)
                d = s.joint_box_lengths
                flags = list(state.engaged)
                woke = False
                for i in range(s.p):
                    if flags[i]:
                        continue
                    xi = state.y[i] - state.box[i] * d[i]
                    if in_invariant(state.primitive[i], params[i], (xi, state.v[i])):
                        flags[i] = True
                        woke = True
                if woke:
                    state = HybridState(state.t, state.y, state.v, state.box, state.primitive, tuple(flags))
                    log.events.append(
                        _event_row(state.t, None, state.box, state.box, state.primitive, state.primitive, state.engaged, None)
                    )
            sample(state)
            if _reach_ok(plan, state):
                log.reached = True
                log.t_reach = state.t
                log.status = "reached"
                return log
    log.status = "timeout"
    return log
