"""SVG rendering of simulated trajectories over the gridded workspace."""

from __future__ import annotations

import csv

from .scenario import Scenario

_VEHICLE_COLORS = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b")


def read_trajectory(path: str) -> tuple[list[str], list[list[str]]]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        rows = list(reader)
    if len(rows) < 2:
        raise ValueError(f"trajectory file {path} has no samples")
    return rows[0], rows[1:]


def _axis_value(axis: int | str, row: list[str], header: list[str], vehicle: int, opv: int) -> float:
    if axis == "time":
        return float(row[0])
    col = header.index(f"y_{vehicle * opv + int(axis) + 1}")
    return float(row[col])


def _axis_span(axis: int | str, scenario: Scenario, rows, header, n_vehicles, opv) -> tuple[float, float]:
    if axis == "time":
        return 0.0, max(float(r[0]) for r in rows) or 1.0
    i = int(axis)
    return 0.0, scenario.vehicle_extent[i] * scenario.box_lengths[i]


def render_svg(trajectory_path: str, scenario: Scenario, axes=(0, 1), width: int = 640) -> str:
    """Project a trajectory onto two axes and draw grid, obstacles, goals,
    one polyline per vehicle, and markers where the primitive switches.

    ``axes`` holds per-vehicle output indices or the literal ``"time"``;
    every vehicle is drawn in the same projected workspace view.
    """
    header, rows = read_trajectory(trajectory_path)
    opv = scenario.outputs_per_vehicle
    for ax in axes:
        if ax != "time" and not (0 <= int(ax) < opv):
            raise ValueError(f"axis {ax} out of range for {opv} outputs per vehicle")
    ax_x, ax_y = axes
    x0, x1 = _axis_span(ax_x, scenario, rows, header, scenario.vehicles, opv)
    y0, y1 = _axis_span(ax_y, scenario, rows, header, scenario.vehicles, opv)
    margin = 24.0
    scale = (width - 2 * margin) / max(x1 - x0, 1e-12)
    height = 2 * margin + (y1 - y0) * scale

    def px(wx: float) -> float:
        return margin + (wx - x0) * scale

    def py(wy: float) -> float:
        return height - margin - (wy - y0) * scale

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" height="{height:.0f}" '
        f'viewBox="0 0 {width:.0f} {height:.0f}">',
        f'<rect x="0" y="0" width="{width:.0f}" height="{height:.0f}" fill="white"/>',
    ]

    spatial = ax_x != "time" and ax_y != "time"
    if spatial:
        ix, iy = int(ax_x), int(ax_y)
        dx, dy = scenario.box_lengths[ix], scenario.box_lengths[iy]
        nx, ny = scenario.vehicle_extent[ix], scenario.vehicle_extent[iy]

        def cell_rect(cx: int, cy: int, fill: str) -> str:
            return (
                f'<rect x="{px(cx * dx):.2f}" y="{py((cy + 1) * dy):.2f}" '
                f'width="{dx * scale:.2f}" height="{dy * scale:.2f}" fill="{fill}"/>'
            )

        for cell in sorted(scenario.obstacles):
            parts.append(cell_rect(cell[ix], cell[iy], "#f4a7a3"))
        for goal_set in scenario.goals_per_vehicle:
            for cell in sorted(goal_set):
                parts.append(cell_rect(cell[ix], cell[iy], "#bde7bd"))
        for k in range(nx + 1):
            parts.append(
                f'<line x1="{px(k * dx):.2f}" y1="{py(y0):.2f}" x2="{px(k * dx):.2f}" y2="{py(y1):.2f}" '
                'stroke="#cccccc" stroke-width="1"/>'
            )
        for k in range(ny + 1):
            parts.append(
                f'<line x1="{px(x0):.2f}" y1="{py(k * dy):.2f}" x2="{px(x1):.2f}" y2="{py(k * dy):.2f}" '
                'stroke="#cccccc" stroke-width="1"/>'
            )

    prim_col = header.index("primitive")
    switches = [i for i in range(1, len(rows)) if rows[i][prim_col] != rows[i - 1][prim_col]]
    for vehicle in range(scenario.vehicles):
        color = _VEHICLE_COLORS[vehicle % len(_VEHICLE_COLORS)]
        pts = " ".join(
            f"{px(_axis_value(ax_x, r, header, vehicle, opv)):.2f},"
            f"{py(_axis_value(ax_y, r, header, vehicle, opv)):.2f}"
            for r in rows
        )
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        for i in switches:
            cx = px(_axis_value(ax_x, rows[i], header, vehicle, opv))
            cy = py(_axis_value(ax_y, rows[i], header, vehicle, opv))
            parts.append(f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="2.5" fill="{color}"/>')

    parts.append("</svg>")
    return "\n".join(parts) + "\n"
