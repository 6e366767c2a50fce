"""Full planning pipeline on the 4x4 single-vehicle reach-avoid scenario.

Builds the workspace graph, composes the maneuver automaton, forms the
product, solves for the worst-case policy, model-checks it, then
simulates a few closed-loop runs and renders one to SVG.
Run as `python demos/02_single_vehicle_pipeline.py`; artifacts land in demos/out/.
"""

from pathlib import Path

import numpy as np

from gridmaneuver.maneuver import compose
from gridmaneuver.planner import check_policy, solve
from gridmaneuver.product import build_pa
from gridmaneuver.render import render_svg
from gridmaneuver.runtime import Plan, random_start, run, write_events_jsonl, write_trajectory_csv
from gridmaneuver.scenario import load_scenario
from gridmaneuver.workspace import build_ots

root = Path(__file__).resolve().parents[1]
out_dir = Path(__file__).resolve().parent / "out"
out_dir.mkdir(exist_ok=True)

scenario = load_scenario(str(root / "scenarios" / "basic4x4.json"))
print(f"scenario: {scenario.vehicle_extent} grid, obstacle cells {sorted(scenario.obstacles)},"
      f" goals {sorted(scenario.goals_per_vehicle[0])}")

ots = build_ots(scenario)
print(f"workspace graph: {ots.n_locations} locations, {ots.edge_count} edges")

ma = compose(scenario.p, scenario.primitive_mode)
print(f"maneuver automaton: {ma.n_primitives} primitives, {ma.edge_count} edges")

pa = build_pa(ots, ma, scenario)
print(f"product automaton: {pa.n_states} states ({pa.admissible_count} admissible),"
      f" {pa.edge_count} edges, {len(pa.final_states)} final")

values, policy = solve(pa)
finite = [v for v in values if v != float("inf")]
print(f"solved: {len(finite)} states can guarantee the goal; worst value {max(finite)}")

result = check_policy(pa, policy)
print(f"model check: certified={result.certified}, longest run {result.max_run_length} steps")

plan = Plan(scenario, ots, ma, pa, values, policy)
rng = np.random.default_rng(0)
for k in range(3):
    y, v = random_start(plan, rng)
    log = run(plan, y, v)
    print(f"run {k}: start y={tuple(round(x, 2) for x in y)} -> {log.status}"
          f" at t={log.t_reach:.2f}s after {len(log.events)} events")
    if k == 0:
        csv_path = out_dir / "basic4x4_run.csv"
        write_trajectory_csv(log, str(csv_path), scenario.p)
        write_events_jsonl(log, str(out_dir / "basic4x4_run.events.jsonl"))
        svg = render_svg(str(csv_path), scenario, axes=(0, 1))
        (out_dir / "basic4x4_run.svg").write_text(svg)
        print(f"  wrote {csv_path} and basic4x4_run.svg")
