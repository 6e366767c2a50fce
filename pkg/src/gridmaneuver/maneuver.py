"""Maneuver automaton: feasible successions of composed motion primitives.

The atomic automaton over {H, F, B} fixes which primitive may follow
which when a coordinate crosses a face (outcome +1/-1) or stays inside
(outcome 0): a crossing coordinate may stop or repeat its motion, a held
coordinate may be re-targeted freely, and a moving coordinate that has
not crossed yet must keep its motion (it can no longer guarantee
stopping inside the box).  Composition takes the p-fold product; in D
mode only primitives with at most one moving coordinate are kept, which
makes every outcome set a singleton.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .primitives import TAGS
from .workspace import Label

Primitive = tuple[str, ...]

_TAG_RANK = {t: i for i, t in enumerate(TAGS)}

_DEFAULT_ATOMIC = (
    ("F", 1, "H"),
    ("F", 1, "F"),
    ("B", -1, "H"),
    ("B", -1, "B"),
    ("H", 0, "H"),
    ("H", 0, "F"),
    ("H", 0, "B"),
    ("F", 0, "F"),
    ("B", 0, "B"),
)


def atomic_edges() -> tuple[tuple[str, int, str], ...]:
    """The atomic transition table (source tag, outcome, target tag)."""
    return _DEFAULT_ATOMIC


def primitive_to_str(m: Primitive) -> str:
    return "".join(m)


def parse_primitive(text: str) -> Primitive:
    prim = tuple(text)
    if any(t not in TAGS for t in prim):
        raise ValueError(f"bad primitive {text!r}")
    return prim


def direction(m: Primitive) -> Label:
    """Per-coordinate nominal exit sign: F -> +1, B -> -1, H -> 0."""
    return tuple(1 if t == "F" else -1 if t == "B" else 0 for t in m)


def moving_coords(m: Primitive) -> tuple[int, ...]:
    return tuple(i for i, t in enumerate(m) if t != "H")


def outcomes(m: Primitive) -> tuple[Label, ...]:
    """Face labels the primitive can reach: one per nonempty subset of
    its moving coordinates, signed by the coordinate's tag."""
    active = moving_coords(m)
    signs = direction(m)
    labels = []
    for mask in range(1, 1 << len(active)):
        label = [0] * len(m)
        for j, coord in enumerate(active):
            if mask & (1 << j):
                label[coord] = signs[coord]
        labels.append(tuple(label))
    return tuple(labels)


def _coord_targets(tag: str, outcome: int, table) -> tuple[str, ...]:
    out = sorted({dst for src, o, dst in table if src == tag and o == outcome}, key=_TAG_RANK.get)
    return tuple(out)


def successors(m: Primitive, label: Label, mode: str = "ND", atomic_table=None) -> tuple[Primitive, ...]:
    """Feasible next primitives after crossing the given face."""
    if label not in outcomes(m):
        raise ValueError(f"label {label} is not an outcome of primitive {primitive_to_str(m)}")
    table = _DEFAULT_ATOMIC if atomic_table is None else atomic_table
    per_coord = [_coord_targets(tag, comp, table) for tag, comp in zip(m, label)]
    result = []
    for combo in itertools.product(*per_coord):
        if mode == "D" and len(moving_coords(combo)) > 1:
            continue
        result.append(combo)
    return tuple(result)


@dataclass
class ManeuverAutomaton:
    """Discrete part of the composed maneuver automaton."""

    p: int
    mode: str
    primitives: tuple[Primitive, ...]
    index: dict[Primitive, int]
    outcome_labels: tuple[tuple[Label, ...], ...]
    succ: dict[tuple[int, Label], tuple[int, ...]]
    pred: dict[tuple[Label, int], tuple[int, ...]]

    @property
    def n_primitives(self) -> int:
        return len(self.primitives)

    @property
    def edge_count(self) -> int:
        return sum(len(v) for v in self.succ.values())

    @property
    def all_hold(self) -> int:
        return self.index[("H",) * self.p]


def compose(p: int, mode: str = "ND", atomic_table=None) -> ManeuverAutomaton:
    """Parallel-compose the atomic automaton p times.

    ND keeps all 3^p primitives; D prunes to those with at most one
    moving coordinate (singleton outcome sets, hence deterministic).
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    if mode not in ("ND", "D"):
        raise ValueError(f"mode must be ND or D, got {mode!r}")
    prims = [m for m in itertools.product(TAGS, repeat=p)]
    if mode == "D":
        prims = [m for m in prims if len(moving_coords(m)) <= 1]
    index = {m: i for i, m in enumerate(prims)}

    outcome_labels = tuple(outcomes(m) for m in prims)
    succ: dict[tuple[int, Label], tuple[int, ...]] = {}
    pred: dict[tuple[Label, int], list[int]] = {}
    for mi, m in enumerate(prims):
        for label in outcome_labels[mi]:
            targets = tuple(
                index[t] for t in successors(m, label, mode=mode, atomic_table=atomic_table)
            )
            succ[(mi, label)] = targets
            for t in targets:
                pred.setdefault((label, t), []).append(mi)
    return ManeuverAutomaton(
        p=p,
        mode=mode,
        primitives=tuple(prims),
        index=index,
        outcome_labels=outcome_labels,
        succ=succ,
        pred={k: tuple(v) for k, v in pred.items()},
    )
