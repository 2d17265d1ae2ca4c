"""Static SVG frames of a plan, one file per time step."""
from __future__ import annotations

from pathlib import Path

from .grid import GridSpec, Plan

CELL = 24


def _frame(grid: GridSpec, plan: Plan, t: int, goals) -> str:
    h, w = grid.m1, grid.m2
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w * CELL}" height="{h * CELL}" viewBox="0 0 {w * CELL} {h * CELL}">',
        f'<rect width="{w * CELL}" height="{h * CELL}" fill="#ffffff"/>',
    ]
    for r in range(h + 1):
        out.append(f'<line x1="0" y1="{r * CELL}" x2="{w * CELL}" y2="{r * CELL}" stroke="#cccccc"/>')
    for c in range(w + 1):
        out.append(f'<line x1="{c * CELL}" y1="0" x2="{c * CELL}" y2="{h * CELL}" stroke="#cccccc"/>')
    for v in sorted(grid.obstacles):
        out.append(f'<rect x="{v[1] * CELL}" y="{v[0] * CELL}" width="{CELL}" height="{CELL}" fill="#333333"/>')
    if goals is not None:
        for g in goals:
            out.append(f'<rect x="{g[1] * CELL + 8}" y="{g[0] * CELL + 8}" width="8" height="8" fill="none" stroke="#d62728"/>')
    for i, v in enumerate(plan.at(t).tolist()):
        cx, cy = v[1] * CELL + CELL // 2, v[0] * CELL + CELL // 2
        out.append(f'<circle cx="{cx}" cy="{cy}" r="{CELL // 2 - 2}" fill="#1f77b4"/>')
        out.append(f'<text x="{cx}" y="{cy + 4}" font-size="9" text-anchor="middle" fill="#ffffff">{i}</text>')
    out.append(f'<text x="2" y="10" font-size="9" fill="#000000">t={t}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def export_animation(plan: Plan, grid: GridSpec, path, goals=None) -> list[Path]:
    """Write ``frame_0000.svg`` ... into directory ``path``.

    3D plans are drawn layer-blind: agents are projected onto the first two
    axes.
    """
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    files = []
    for t in range(plan.makespan + 1):
        f = out / f"frame_{t:04d}.svg"
        f.write_text(_frame(grid, plan, t, goals))
        files.append(f)
    return files
