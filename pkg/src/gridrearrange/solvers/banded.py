"""Band-granular three-phase rearrangement shared by the sparse solvers.

Agents rest on cell slots.  Every horizontal band of cells is treated as one
table row; colors are goal bands.  Virtual fillers occupy the unused slots so
the color/band multigraph is exactly regular, travel with the real agents
through the shuffle phases and are dropped from the returned plans.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..grid import GridSpec, Plan
from ..matching import build_color_row_graph
from ..shuffles import assign_cell_slots, compose_parallel_bands, highway_shuffle, linear_merge_batch
from ..unlabeled import HORIZONTAL, VERTICAL, CellPattern, center_balanced
from .common import SHUFFLE_PHASES, PhaseTrace, SolverConfig, order_matchings

HIGHWAY = "highway"
MERGE = "merge"


@dataclass
class BandLayout:
    grid: GridSpec
    pattern: CellPattern
    primitive: str

    @property
    def cells(self) -> tuple[int, int]:
        return self.pattern.cells(self.grid)

    def slot_lines(self, cell: int, orientation: str) -> list[int]:
        """Sorted coordinates along the travel axis of one cell's slots."""
        s = self.pattern.size
        axis = 1 if orientation == HORIZONTAL else 0
        return sorted(s * cell + o[axis] for o in self.pattern.slots(orientation))


def _slots(layout: BandLayout) -> np.ndarray:
    return layout.pattern.slot_vertices(layout.grid, HORIZONTAL)[:, :2]


def _fill_virtual(layout: BandLayout, s1: np.ndarray, g1: np.ndarray, graph):
    """Start and goal slots for every virtual payload of ``graph``."""
    s = layout.pattern.size
    slots = _slots(layout)
    used_s = {tuple(v) for v in s1.tolist()}
    used_g = {tuple(v) for v in g1.tolist()}
    free_s: dict[int, list] = {}
    free_g: dict[int, list] = {}
    for v in slots.tolist():
        if tuple(v) not in used_s:
            free_s.setdefault(v[0] // s, []).append(v)
        if tuple(v) not in used_g:
            free_g.setdefault(v[0] // s, []).append(v)
    n = len(s1)
    extra = sorted((p, l, r) for l, r, p in graph.edges if p >= n)
    vs = np.array([free_s[r].pop() for _, _, r in extra], dtype=np.int64).reshape(-1, 2)
    vg = np.array([free_g[l].pop() for _, l, _ in extra], dtype=np.int64).reshape(-1, 2)
    return np.concatenate([s1, vs]), np.concatenate([g1, vg])


def _band_shuffle(layout: BandLayout, pos: np.ndarray, target_line: np.ndarray, orientation: str) -> Plan:
    """Run one shuffle primitive in every band along ``orientation`` at once.

    ``target_line`` is each agent's final coordinate along its band.
    """
    s = layout.pattern.size
    along = 1 if orientation == HORIZONTAL else 0
    band = pos[:, 1 - along] // s
    if layout.primitive == HIGHWAY:
        pieces = []
        for b in np.unique(band):
            ids = np.nonzero(band == b)[0]
            tr = highway_shuffle(pos[ids, along], target_line[ids])
            out = np.empty_like(tr)
            out[..., along] = tr[..., 1]
            out[..., 1 - along] = s * b + tr[..., 0]
            pieces.append((ids, out))
        traj = compose_parallel_bands(pieces, len(pos), pos)
        return Plan(traj.transpose(1, 0, 2))
    # linear merge: every band line is full
    bands = np.unique(band)
    m = layout.grid.shape[along]
    targets = np.empty((len(bands), m), dtype=np.int64)
    index = {int(b): k for k, b in enumerate(bands)}
    row = np.array([index[int(b)] for b in band])
    targets[row, pos[:, along]] = target_line
    traj, _ = linear_merge_batch(targets)  # (B, T+1, m, 2)
    tr = traj[row, :, pos[:, along]]  # (n, T+1, 2)
    out = np.empty_like(tr)
    out[..., along] = tr[..., 1]
    out[..., 1 - along] = s * band[:, None] + tr[..., 0]
    return Plan(out)


def _cell_targets(layout: BandLayout, pos: np.ndarray, target_cell: np.ndarray, orientation: str) -> np.ndarray:
    s = layout.pattern.size
    along = 1 if orientation == HORIZONTAL else 0
    band = pos[:, 1 - along] // s
    out = np.empty(len(pos), dtype=np.int64)
    for b in np.unique(band):
        ids = np.nonzero(band == b)[0]
        out[ids] = assign_cell_slots(pos[ids, along], target_cell[ids], lambda c: layout.slot_lines(c, orientation))
    return out


def band_rearrange(layout: BandLayout, s1, g1, config: SolverConfig, trace: PhaseTrace) -> Plan:
    """Shuffle agents resting on horizontal slots ``s1`` onto ``g1``.

    Appends the five middle phases to ``trace`` and returns their
    concatenation restricted to the real agents.
    """
    s1 = np.asarray(s1, dtype=np.int64).reshape(-1, 2)
    g1 = np.asarray(g1, dtype=np.int64).reshape(-1, 2)
    n = len(s1)
    if np.array_equal(s1, g1):
        still = Plan.stationary(s1, 2)
        for name in SHUFFLE_PHASES:
            trace.add(name, still)
        return still
    s = layout.pattern.size
    c1, c2 = layout.cells
    cap = layout.pattern.capacity
    d = c2 * cap
    colors = g1[:, 0] // s
    bands = s1[:, 0] // s
    graph = build_color_row_graph(colors, bands, c1, d)
    start, goal = _fill_virtual(layout, s1, g1, graph)
    real = np.arange(len(start)) < n
    centre = [s * (k // cap) + s // 2 for k in range(d)]
    lam = config.lba_lambda

    def cost(payloads, k):
        payloads = np.asarray(payloads)
        col = start[payloads, 1] if lam == 0 else goal[payloads, 1]
        return np.where(real[payloads], np.abs(col - centre[k]), 0)

    matchings = order_matchings(graph, config.matching_mode, cost)
    mid_cell = np.empty(len(start), dtype=np.int64)
    for k, m in enumerate(matchings):
        for _, agent in m:
            mid_cell[agent] = k // cap

    grid = layout.grid
    ids = np.arange(n)
    # phase 1: rows, into the matched vertical band
    t1 = _cell_targets(layout, start, mid_cell, HORIZONTAL)
    p = _band_shuffle(layout, start, t1, HORIZONTAL)
    trace.add("shuffle1", p.subset(ids))
    plan = p
    # phase 2: columns, into the goal band
    p = center_balanced(grid, layout.pattern, plan.at(plan.makespan), VERTICAL)
    trace.add("recenter1", p.subset(ids))
    plan = plan.then(p)
    pos = plan.at(plan.makespan)
    t2 = _cell_targets(layout, pos, goal[:, 0] // s, VERTICAL)
    p = _band_shuffle(layout, pos, t2, VERTICAL)
    trace.add("shuffle2", p.subset(ids))
    plan = plan.then(p)
    # phase 3: rows, onto the exact goal slot
    p = center_balanced(grid, layout.pattern, plan.at(plan.makespan), HORIZONTAL)
    trace.add("recenter2", p.subset(ids))
    plan = plan.then(p)
    pos = plan.at(plan.makespan)
    p = _band_shuffle(layout, pos, goal[:, 1], HORIZONTAL)
    trace.add("shuffle3", p.subset(ids))
    plan = plan.then(p)
    end = plan.at(plan.makespan)
    if not np.array_equal(end, goal):
        raise RuntimeError("band rearrangement missed its goal slots")
    return plan.subset(ids)
