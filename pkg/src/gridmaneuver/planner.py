"""Worst-case shortest paths on the product automaton and policy checking.

The value of a state is the best cost the controller can guarantee
against adversarial face outcomes:

    V(q) = max over outcome labels of min over edges of  D(e) + V(q')

with V fixed to the terminal cost on final states and infinity where the
goal cannot be guaranteed.  ``solve`` computes V by label setting (a
Dijkstra variant for this max-min recursion; requires strictly positive
edge costs), ``value_iteration`` is the independent fixpoint oracle, and
``check_policy`` model-checks a policy by exhaustive traversal of the
closed-loop graph.
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field

from . import __version__
from .errors import PolicyMismatchError
from .maneuver import moving_coords, parse_primitive, primitive_to_str
from .product import ProductAutomaton, finals
from .scenario import Scenario, scenario_hash
from .workspace import Label, label_to_str, parse_label

INF = math.inf

SOLVER_VERSION = f"gridmaneuver-{__version__}"


@dataclass
class Policy:
    """Memoryless discrete feedback: chosen successor per state and face."""

    choices: dict[int, dict[Label, int]]
    dispatch: dict[int, int] = field(default_factory=dict)


def _positive_costs(pa: ProductAutomaton) -> None:
    used = {pa.split(q)[1] for q in pa.adj}
    if any(pa.prim_cost[mi] <= 0.0 for mi in used):
        raise ValueError("label-setting requires strictly positive edge costs")


def solve(pa: ProductAutomaton) -> tuple[list[float], Policy]:
    """Label-setting computation of the worst-case value function.

    A state is finalized once every label in its outcome set has an edge
    to a finalized state; its value is the worst label's best edge.
    Returns the value per state (math.inf where unguaranteed) and the
    tie-broken policy (smallest target state index among minimizers).
    """
    final_states = finals(pa)
    _positive_costs(pa)
    ma, ots = pa.ma, pa.ots
    n_prims = ma.n_primitives
    values = [INF] * pa.n_states
    finalized = [False] * pa.n_states
    tentative: dict[int, float] = {}
    best: dict[int, dict[Label, float]] = {}
    needed = [len(labels) for labels in ma.outcome_labels]
    final_set = frozenset(final_states)

    pred_by_target: dict[int, list[tuple[Label, tuple[int, ...]]]] = {}
    for (label, m_tgt), preds in ma.pred.items():
        pred_by_target.setdefault(m_tgt, []).append((label, preds))

    heap: list[tuple[float, int]] = []
    for q in final_states:
        tentative[q] = pa.terminal_cost
        heapq.heappush(heap, (pa.terminal_cost, q))

    cells = ots.cells
    cell_index = ots.index
    admissible = pa.admissible
    prim_cost = pa.prim_cost

    while heap:
        v, q = heapq.heappop(heap)
        if finalized[q] or v != tentative[q]:
            continue
        finalized[q] = True
        values[q] = v
        loc_t, m_t = divmod(q, n_prims)
        cell_t = cells[loc_t]
        for label, preds in pred_by_target.get(m_t, ()):
            src_cell = tuple(c - o for c, o in zip(cell_t, label))
            loc_s = cell_index.get(src_cell)
            if loc_s is None:
                continue
            base = loc_s * n_prims
            for mp in preds:
                qp = base + mp
                if finalized[qp] or qp in final_set or not admissible[qp]:
                    continue
                cand = prim_cost[mp] + v
                table = best.setdefault(qp, {})
                cur = table.get(label)
                if cur is None or cand < cur:
                    table[label] = cand
                    if len(table) == needed[mp]:
                        tent = max(table.values())
                        if tent < tentative.get(qp, INF):
                            tentative[qp] = tent
                            heapq.heappush(heap, (tent, qp))

    policy = extract_policy(pa, values)
    return values, policy


def value_iteration(pa: ProductAutomaton) -> list[float]:
    """Fixpoint iteration of the max-min recursion; oracle for ``solve``."""
    values = [INF] * pa.n_states
    for q in pa.final_states:
        values[q] = pa.terminal_cost
    final_set = frozenset(pa.final_states)
    items = [
        (q, pa.prim_cost[pa.split(q)[1]], entries)
        for q, entries in pa.adj.items()
        if q not in final_set
    ]
    changed = True
    while changed:
        changed = False
        for q, cost, entries in items:
            worst = 0.0
            for _, targets in entries:
                best_edge = INF
                for t in targets:
                    cand = cost + values[t]
                    if cand < best_edge:
                        best_edge = cand
                if best_edge > worst:
                    worst = best_edge
                    if worst == INF:
                        break
            if worst < values[q]:
                values[q] = worst
                changed = True
    return values


def extract_policy(pa: ProductAutomaton, values: list[float]) -> Policy:
    """Greedy policy from a value function, ties to the smallest target index."""
    final_set = frozenset(pa.final_states)
    choices: dict[int, dict[Label, int]] = {}
    for q, entries in pa.adj.items():
        if values[q] == INF or q in final_set:
            continue
        cost = pa.prim_cost[pa.split(q)[1]]
        per_label: dict[Label, int] = {}
        for label, targets in entries:
            best_val = INF
            best_t = -1
            for t in targets:
                cand = cost + values[t]
                if cand < best_val or (cand == best_val and t < best_t):
                    best_val = cand
                    best_t = t
            per_label[label] = best_t
        choices[q] = per_label

    # dispatch prefers the most simultaneously moving primitive among the
    # value minimizers, so multi-vehicle runs are asynchronous by default
    n_prims = pa.ma.n_primitives
    movers = [len(moving_coords(m)) for m in pa.ma.primitives]
    dispatch: dict[int, int] = {}
    for loc in range(pa.ots.n_locations):
        base = loc * n_prims
        best = None
        for mi in range(n_prims):
            q = base + mi
            if not pa.admissible[q] or values[q] == INF:
                continue
            key = (values[q], -movers[mi], mi)
            if best is None or key < best:
                best = key
        if best is not None:
            dispatch[loc] = best[2]
    return Policy(choices=choices, dispatch=dispatch)


@dataclass
class Counterexample:
    """A concrete policy run that never reaches a final state."""

    path: list[tuple[int, Label]]
    loop_start: int | None = None
    stuck_state: int | None = None


@dataclass
class CheckResult:
    certified: bool
    checked_states: int
    max_run_length: int
    counterexample: Counterexample | None = None


def check_policy(pa: ProductAutomaton, policy: Policy) -> CheckResult:
    """Exhaustively model-check the closed loop of policy vs. adversary.

    Certifies that from every state with a policy entry, all adversarial
    label choices lead to a final state; otherwise returns a concrete
    counterexample (a lasso, or a walk into a state with no entry).
    """
    final_set = frozenset(pa.final_states)
    branches: dict[int, list[tuple[Label, int]]] = {
        q: sorted(per_label.items()) for q, per_label in policy.choices.items()
    }
    remaining = {q: len(br) for q, br in branches.items()}
    reverse: dict[int, list[int]] = {}
    for q, br in branches.items():
        for _, t in br:
            reverse.setdefault(t, []).append(q)

    depth: dict[int, int] = {q: 0 for q in final_set}
    queue = list(final_set)
    certified = set(final_set)
    while queue:
        t = queue.pop()
        for q in reverse.get(t, ()):
            if q in certified:
                continue
            remaining[q] -= 1
            if remaining[q] == 0:
                depth[q] = 1 + max(depth[s] for _, s in branches[q])
                certified.add(q)
                queue.append(q)

    bad = [q for q in branches if q not in certified]
    max_len = max((depth[q] for q in branches if q in certified), default=0)
    if not bad:
        return CheckResult(True, len(branches), max_len)

    # walk adversarially through uncertified states until a repeat or a
    # state the policy does not cover
    start = min(bad)
    path: list[tuple[int, Label]] = []
    seen: dict[int, int] = {}
    q = start
    while True:
        if q in seen:
            return CheckResult(False, len(branches), max_len, Counterexample(path, loop_start=seen[q]))
        if q not in branches:
            return CheckResult(False, len(branches), max_len, Counterexample(path, stuck_state=q))
        seen[q] = len(path)
        nxt = None
        for label, t in branches[q]:
            if t not in certified:
                nxt = (label, t)
                break
        assert nxt is not None, "uncertified state with all branches certified"
        path.append((q, nxt[0]))
        q = nxt[1]


def save_policy(path: str, scenario: Scenario, pa: ProductAutomaton, values: list[float], policy: Policy) -> None:
    """Write the policy file (JSON, deterministic layout)."""
    doc = {
        "solver": SOLVER_VERSION,
        "scenario_hash": scenario_hash(scenario),
        "primitive_mode": scenario.primitive_mode,
        "costs": {
            "edge_cost": scenario.edge_cost,
            "terminal_cost": scenario.terminal_cost,
            "variant": scenario.cost_variant,
            "final_any_primitive": scenario.final_any_primitive,
        },
        "values": {str(q): v for q, v in enumerate(values) if v != INF},
        "choices": {
            str(q): {
                label_to_str(label): primitive_to_str(pa.ma.primitives[pa.split(t)[1]])
                for label, t in sorted(per_label.items())
            }
            for q, per_label in sorted(policy.choices.items())
        },
        "dispatch": {
            str(loc): primitive_to_str(pa.ma.primitives[mi]) for loc, mi in sorted(policy.dispatch.items())
        },
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_policy(path: str, scenario: Scenario, pa: ProductAutomaton) -> tuple[list[float], Policy]:
    """Read a policy file back, rejecting files for a different scenario."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("scenario_hash") != scenario_hash(scenario):
        raise PolicyMismatchError("policy file was computed for a different scenario")
    values = [INF] * pa.n_states
    for key, v in doc.get("values", {}).items():
        values[int(key)] = float(v)

    ma, ots = pa.ma, pa.ots
    choices: dict[int, dict[Label, int]] = {}
    for key, per_label in doc.get("choices", {}).items():
        q = int(key)
        loc = pa.split(q)[0]
        table: dict[Label, int] = {}
        for label_text, prim_text in per_label.items():
            label = parse_label(label_text)
            target_loc = ots.neighbor(loc, label)
            if not isinstance(target_loc, int):
                raise PolicyMismatchError(f"policy entry {key}/{label_text} crosses into {target_loc}")
            table[label] = pa.state_index(target_loc, ma.index[parse_primitive(prim_text)])
        choices[q] = table
    dispatch = {
        int(loc): ma.index[parse_primitive(prim_text)]
        for loc, prim_text in doc.get("dispatch", {}).items()
    }
    return values, Policy(choices=choices, dispatch=dispatch)
