"""Tour of the three atomic motion primitives on the canonical box.

Walks through the gain construction, the invariant regions, and the
closed-loop behavior, checking a couple of closed-form anchors along the
way.  Run as `python demos/01_primitives_tour.py`.
"""

import math

import numpy as np

from gridmaneuver.primitives import (
    AtomicParams,
    atomic_primitive,
    closed_loop_matrix,
    control,
    in_invariant,
    invariant_vertices,
)

par = AtomicParams(box_length=1.0, max_accel=1.0)
print(f"canonical box: d = {par.box_length} m, u = {par.max_accel} m/s^2")
print(f"derived speed limit v = sqrt(d*u) = {par.max_speed} m/s")
print(f"gains: k_pos = {par.k_pos}, k_vel = {par.k_vel}")
print()

for tag, name in (("H", "Hold"), ("F", "Forward"), ("B", "Backward")):
    prim = atomic_primitive(tag, par)
    print(f"{name}: u(xi, nu) = {prim.k_pos}*xi + {prim.k_vel}*nu + {prim.offset}")
    print(f"  invariant vertices: {invariant_vertices(tag, par)}")
print()

hold = atomic_primitive("H", par)
print("Hold regulates to the box center; at (d/2, 0) the command is",
      control(hold, (0.5, 0.0)))
print("At the invariant corner (0, -v) the command peaks at",
      control(hold, (0.0, -1.0)), "(three times the nominal limit)")
print()

eigs = np.linalg.eigvals(closed_loop_matrix("H", par))
print("Hold closed-loop eigenvalues:", np.sort_complex(eigs))
print("damping ratio:", -eigs[0].real / abs(eigs[0]))
print()

# integrate Hold from the top-left vertex and watch the overshoot
state = np.array([0.0, 1.0])
h = 0.005
peak = 0.0


def hold_accel(s):
    return hold.k_pos * s[0] + hold.k_vel * s[1] + hold.offset


for _ in range(int(8.0 / h)):
    k1 = np.array([state[1], hold_accel(state)])
    s2 = state + 0.5 * h * k1
    k2 = np.array([s2[1], hold_accel(s2)])
    s3 = state + 0.5 * h * k2
    k3 = np.array([s3[1], hold_accel(s3)])
    s4 = state + h * k3
    k4 = np.array([s4[1], hold_accel(s4)])
    state = state + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    peak = max(peak, state[0])

print(f"Hold from (0, v): peak position {peak:.6f}")
print(f"closed form 1/2 + exp(-pi/2)/2 = {0.5 + 0.5 * math.exp(-math.pi / 2):.6f}")
print(f"settled near the center: xi = {state[0]:.6f}, nu = {state[1]:.6f}")
print()

print("membership checks with the polytopic invariants:")
for point in [(0.5, 0.0), (0.9, 1.0), (0.0, 0.3)]:
    verdicts = {tag: in_invariant(tag, par, point) for tag in "HFB"}
    print(f"  state {point}: {verdicts}")
