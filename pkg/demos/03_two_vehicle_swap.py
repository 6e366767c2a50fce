"""Two vehicles swapping places through a narrow passage (5x6 grid, p=4).

Plans once offline, then simulates the nominal closed loop and a run
with a piecewise-constant wind delaying vehicle 2.  The same policy
produces a different box sequence under the disturbance, with the
collision predicate holding throughout.
Run as `python demos/03_two_vehicle_swap.py`; artifacts land in demos/out/.
"""

import time
from pathlib import Path

from gridmaneuver.render import render_svg
from gridmaneuver.runtime import make_plan, parse_disturbance, run, write_trajectory_csv
from gridmaneuver.scenario import cell_blocked, load_scenario

root = Path(__file__).resolve().parents[1]
out_dir = Path(__file__).resolve().parent / "out"
out_dir.mkdir(exist_ok=True)

scenario = load_scenario(str(root / "scenarios" / "swap5x6.json"))
print("two vehicles on a 5x6 grid (boxes 1.0 x 0.75 m), passage at x=2")

t0 = time.perf_counter()
plan = make_plan(scenario)
print(f"offline synthesis: {plan.pa.n_states} product states,"
      f" {plan.pa.edge_count} edges in {time.perf_counter() - t0:.1f}s")

# vehicle 1 starts bottom-left, vehicle 2 at vehicle 1's goal; they swap
x0 = [0.5, 1.875, 4.5, 2.625]

nominal = run(plan, x0)
print(f"nominal: {nominal.status} at t={nominal.t_reach:.1f}s,"
      f" {len(nominal.box_sequence())} joint boxes visited")

wind = parse_disturbance("0.5:8.0:2:0.3")
print("adding wind +0.3 m/s^2 on vehicle 2's x output during [0.5, 8.0] s")
disturbed = run(plan, x0, disturbances=[wind])
print(f"disturbed: {disturbed.status} at t={disturbed.t_reach:.1f}s")
print(f"box sequences differ: {disturbed.box_sequence() != nominal.box_sequence()}")

for log in (nominal, disturbed):
    bad = [row for row in log.samples if cell_blocked(scenario, row[3])]
    assert not bad
print("collision predicate held at every sample in both runs")

for name, log in (("swap_nominal", nominal), ("swap_disturbed", disturbed)):
    csv_path = out_dir / f"{name}.csv"
    write_trajectory_csv(log, str(csv_path), scenario.p)
    svg = render_svg(str(csv_path), scenario, axes=(0, 1))
    (out_dir / f"{name}.svg").write_text(svg)
    print(f"wrote {csv_path} and {name}.svg")
