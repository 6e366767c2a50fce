"""Atomic motion primitives over the canonical one-output box.

Three affine feedback laws per output coordinate: Hold (H) regulates to
the box center, Forward (F) drives the coordinate out the upper face,
Backward (B) out the lower face.  Each law comes with a polytopic
invariant region in local (position, velocity) coordinates; trajectories
started inside it stay inside until they exit through the contracted
face.  Gains depend only on the box length d and the acceleration limit
u, with the derived speed limit v = sqrt(d*u).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TAGS = ("H", "F", "B")

INVARIANT_TOL = 1e-9


@dataclass(frozen=True)
class AtomicParams:
    """Canonical-box constants for one output coordinate."""

    box_length: float
    max_accel: float

    def __post_init__(self):
        if self.box_length <= 0 or self.max_accel <= 0:
            raise ValueError("box length and acceleration limit must be positive")

    @property
    def max_speed(self) -> float:
        return math.sqrt(self.box_length * self.max_accel)

    @property
    def k_pos(self) -> float:
        return -2.0 * self.max_accel / self.box_length

    @property
    def k_vel(self) -> float:
        return -2.0 * self.max_accel / self.max_speed


@dataclass(frozen=True)
class AtomicPrimitive:
    """Affine feedback u = k_pos*xi + k_vel*nu + offset in local coordinates."""

    tag: str
    k_pos: float
    k_vel: float
    offset: float


def atomic_primitive(tag: str, params: AtomicParams) -> AtomicPrimitive:
    if tag == "H":
        return AtomicPrimitive("H", params.k_pos, params.k_vel, params.max_accel)
    if tag == "F":
        return AtomicPrimitive("F", 0.0, params.k_vel, params.max_accel)
    if tag == "B":
        return AtomicPrimitive("B", 0.0, params.k_vel, -params.max_accel)
    raise ValueError(f"unknown primitive tag {tag!r}")


def control(prim: AtomicPrimitive, state, clip: float | None = None) -> float:
    """Evaluate the feedback law; optionally saturate at +-clip."""
    xi, nu = state
    u = prim.k_pos * xi + prim.k_vel * nu + prim.offset
    if clip is not None:
        u = max(-clip, min(clip, u))
    return u


# Halfspaces a*xi' + b*nu' <= c over normalized coordinates xi' = xi/d,
# nu' = nu/v.  Hold's region is the hexagon spanned by the six design
# vertices; Forward/Backward use the velocity-sign rectangles.
_HALFSPACES = {
    "F": ((-1.0, 0.0, 0.0), (1.0, 0.0, 1.0), (0.0, -1.0, 0.0), (0.0, 1.0, 1.0)),
    "B": ((-1.0, 0.0, 0.0), (1.0, 0.0, 1.0), (0.0, 1.0, 0.0), (0.0, -1.0, 1.0)),
    "H": (
        (-1.0, 0.0, 0.0),
        (1.0, 0.0, 1.0),
        (0.0, 1.0, 1.0),
        (0.0, -1.0, 1.0),
        (2.0, 1.0, 2.0),
        (-2.0, -1.0, 0.0),
    ),
}


def invariant_halfspaces(tag: str) -> tuple[tuple[float, float, float], ...]:
    return _HALFSPACES[tag]


def in_invariant(tag: str, params: AtomicParams, state, tol: float = INVARIANT_TOL) -> bool:
    """Polytope membership, tolerant by ``tol`` in normalized units."""
    xi = state[0] / params.box_length
    nu = state[1] / params.max_speed
    return all(a * xi + b * nu <= c + tol for a, b, c in _HALFSPACES[tag])


def invariant_vertices(tag: str, params: AtomicParams) -> tuple[tuple[float, float], ...]:
    d, v = params.box_length, params.max_speed
    if tag == "F":
        return ((0.0, 0.0), (d, 0.0), (d, v), (0.0, v))
    if tag == "B":
        return ((0.0, 0.0), (d, 0.0), (d, -v), (0.0, -v))
    if tag == "H":
        return ((0.0, 0.0), (0.0, v), (d / 2.0, v), (d, 0.0), (d, -v), (d / 2.0, -v))
    raise ValueError(f"unknown primitive tag {tag!r}")


def exit_outcomes(tag: str) -> frozenset[int]:
    """Atomic face outcomes: +1 upper face, -1 lower face, 0 no crossing."""
    if tag == "H":
        return frozenset({0})
    if tag == "F":
        return frozenset({1, 0})
    if tag == "B":
        return frozenset({-1, 0})
    raise ValueError(f"unknown primitive tag {tag!r}")


def closed_loop_matrix(tag: str, params: AtomicParams) -> np.ndarray:
    """State matrix of the closed-loop double integrator in local coordinates."""
    prim = atomic_primitive(tag, params)
    return np.array([[0.0, 1.0], [prim.k_pos, prim.k_vel]])


def sample_invariant(tag: str, params: AtomicParams, rng: np.random.Generator, n: int) -> np.ndarray:
    """Uniform samples from the invariant region, shape (n, 2)."""
    d, v = params.box_length, params.max_speed
    if tag == "F":
        out = rng.uniform((0.0, 0.0), (d, v), size=(n, 2))
    elif tag == "B":
        out = rng.uniform((0.0, -v), (d, 0.0), size=(n, 2))
    else:
        # rejection from the bounding rectangle (hexagon fills 3/4 of it)
        out = np.empty((n, 2))
        have = 0
        while have < n:
            cand = rng.uniform((0.0, -v), (d, v), size=(2 * (n - have), 2))
            xi, nu = cand[:, 0] / d, cand[:, 1] / v
            keep = cand[(nu <= 2.0 * (1.0 - xi)) & (nu >= -2.0 * xi)]
            take = min(len(keep), n - have)
            out[have : have + take] = keep[:take]
            have += take
    return out
