"""3D pipelines: z-shuffles inside pillars around per-layer 2D rearrangements.

A pillar is the stack of one cell over all layers.  Inside a pillar every
slot column (one resting slot per layer) together with the cell rows beside
it forms an x-z slab; slabs are vertex-disjoint, so a z-shuffle runs one 2D
band primitive per slab.  Agents only change slot column through an in-cell
settle, and an edge colouring of the layer-to-layer multigraph picks columns
so that every slab carries a plain permutation.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from ..grid import GridSpec, Instance, Plan
from ..matching import BipartiteMultigraph, build_color_row_graph, decompose_regular_multigraph
from ..oracle import optimal_makespan_labeled
from ..shuffles import compose_parallel_bands
from ..unlabeled import HALF, HORIZONTAL, THIRD, CellPattern, balanced_targets, unlabeled_route
from .banded import HIGHWAY, MERGE, BandLayout, _band_shuffle, band_rearrange
from .common import PhaseTrace, PreconditionError, SolverConfig, check_bound, order_matchings
from .grm import full_line_shuffle, grm_bound
from .sparse import grlm_shuffle_bound

Z_PHASES = ("zshuffle1", "shuffle1", "recenter1", "shuffle2", "recenter2", "shuffle3", "zshuffle2")


def shuffle3d_bound(m1: int, m2: int, m3: int, base: str) -> int:
    if base == "grh":
        return m1 + 2 * m2 + 2 * m3 + 24
    if base == "grlm":
        return grlm_shuffle_bound(m1, m2) + 2 * (m3 + 2 * int(np.ceil(np.log2(max(m3, 2)))) + 5)
    return grm_bound(m1, m2, 4) + 2 * (4 * m3 + 24)


# --------------------------------------------------------------- settling


@lru_cache(maxsize=None)
def _settle_local(size: int, src: tuple, dst: tuple) -> tuple:
    g = GridSpec(size, size)
    _, plan = optimal_makespan_labeled(g, Instance(g, src, dst))
    return tuple(map(tuple, plan.paths.tolist()))


def _settle(pattern: CellPattern, pos: np.ndarray, target: np.ndarray) -> Plan:
    """Labeled moves inside each cell of each layer, all cells at once."""
    s = pattern.size
    cell = np.concatenate([pos[:, :2] // s, pos[:, 2:]], axis=1)
    if not np.array_equal(cell, np.concatenate([target[:, :2] // s, target[:, 2:]], axis=1)):
        raise ValueError("settle targets leave the cell")
    _, inv = np.unique(cell, axis=0, return_inverse=True)
    inv = inv.ravel()
    jobs = []
    T = 0
    for g in np.unique(inv):
        ids = np.nonzero(inv == g)[0]
        if np.array_equal(pos[ids], target[ids]):
            continue
        base = cell[ids[0], :2] * s
        src = tuple(map(tuple, (pos[ids, :2] - base).tolist()))
        dst = tuple(map(tuple, (target[ids, :2] - base).tolist()))
        paths = np.asarray(_settle_local(s, src, dst), dtype=np.int64)
        jobs.append((ids, base, paths))
        T = max(T, paths.shape[1] - 1)
    out = np.repeat(pos[:, None, :], T + 1, axis=1)
    for ids, base, paths in jobs:
        t = paths.shape[1] - 1
        paths = np.concatenate([paths, np.repeat(paths[:, -1:], T - t, axis=1)], axis=1)
        out[ids, :, :2] = paths + base
    return Plan(out)


# -------------------------------------------------------------- z-shuffles


def _slab_shuffle(grid: GridSpec, pattern: CellPattern, primitive: str, pos: np.ndarray, target_z: np.ndarray) -> Plan:
    """Move every agent along z inside its slab to layer ``target_z``."""
    s = pattern.size
    key = np.stack([pos[:, 0] // s, pos[:, 1]], axis=1)
    _, slab = np.unique(key, axis=0, return_inverse=True)
    slab = slab.ravel()
    B = int(slab.max()) + 1
    flat = np.stack([s * slab + pos[:, 0] % s, pos[:, 2]], axis=1)
    layout = BandLayout(GridSpec(s * B, grid.m3), pattern, primitive)
    p = _band_shuffle(layout, flat, target_z, HORIZONTAL).paths
    out = np.empty(p.shape[:2] + (3,), dtype=np.int64)
    out[..., 0] = (pos[:, 0] // s * s)[:, None] + p[..., 0] % s
    out[..., 1] = pos[:, 1][:, None]
    out[..., 2] = p[..., 1]
    return Plan(out)


def _column_colouring(pillar: np.ndarray, layer_from: np.ndarray, layer_to: np.ndarray, m3: int) -> np.ndarray:
    """Slot-column index per agent: distinct within a layer at both ends."""
    colour = np.empty(len(pillar), dtype=np.int64)
    for p in np.unique(pillar):
        ids = np.nonzero(pillar == p)[0]
        graph = BipartiteMultigraph(m3, m3, [(int(layer_to[i]), int(layer_from[i]), int(i)) for i in ids])
        for c, m in enumerate(decompose_regular_multigraph(graph).matchings):
            for _, agent in m:
                colour[agent] = c
    return colour


# ------------------------------------------------------------------ driver


def _stack_layer_traces(traces: list, groups: list, n: int, pos: np.ndarray, trace: PhaseTrace, keep) -> np.ndarray:
    for name in traces[0].names():
        pieces = []
        for tr, ids in zip(traces, groups):
            p = tr[name].plan.paths  # (k, T+1, 2)
            z = np.broadcast_to(pos[ids, 2][:, None, None], p.shape[:2] + (1,))
            pieces.append((ids, np.concatenate([p, z], axis=2).transpose(1, 0, 2)))
        traj = compose_parallel_bands(pieces, n, pos)
        trace.add(name, Plan(traj.transpose(1, 0, 2)).subset(keep))
        pos = traj[-1]
    return pos


def solve_3d(instance: Instance, base: str = "grh", config: SolverConfig | None = None):
    """Route a 3D instance with the given 2D base method; returns ``(plan, trace)``."""
    config = config or SolverConfig(algorithm="grh", dimension=3)
    grid = instance.grid
    if grid.dim != 3:
        raise PreconditionError("solve_3d needs a 3D grid")
    if grid.obstacles:
        raise PreconditionError("3D pipelines do not support obstacles")
    m1, m2, m3 = grid.shape
    if not m1 >= m2 >= m3:
        raise PreconditionError("requires m1 >= m2 >= m3")
    if base == "grm":
        return _solve_grm3d(instance, config)
    if base == "grh":
        pattern, primitive = THIRD, HIGHWAY
    elif base == "grlm":
        if m1 % 2 or m2 % 2:
            raise PreconditionError("both horizontal sides must be even")
        pattern, primitive = HALF, MERGE
    else:
        raise ValueError(f"unknown base {base!r}")
    c1, c2 = pattern.cells(grid)
    slots_total = c1 * c2 * pattern.capacity * m3
    if c1 == 0 or c2 == 0 or instance.n > slots_total:
        raise PreconditionError(f"{instance.n} agents exceed the {slots_total} slots")
    n = instance.n
    trace = PhaseTrace()
    s1t, _ = balanced_targets(grid, instance.starts, pattern, HORIZONTAL)
    into = unlabeled_route(grid, instance.starts, s1t)
    g1t, _ = balanced_targets(grid, instance.goals, pattern, HORIZONTAL)
    out = unlabeled_route(grid, instance.goals, g1t).reversed()
    trace.add("unlabeled_in", into)
    s1 = into.at(into.makespan)
    g1 = out.at(0)

    if np.array_equal(s1, g1):
        still = Plan.stationary(s1, 3)
        for name in Z_PHASES:
            trace.add(name, still)
        trace.add("unlabeled_out", out)
        return _finish3d(trace, config)
    s, cap = pattern.size, pattern.capacity
    n_p = c1 * c2
    pillar_of = lambda v: (v[:, 0] // s) * c2 + v[:, 1] // s
    d = cap * m3
    graph = build_color_row_graph(pillar_of(g1), pillar_of(s1), n_p, d)
    start, goal = _fill_virtual3d(pattern, grid, s1, g1, graph, c2)
    N = len(start)
    keep = np.arange(n)
    lam = config.lba_lambda

    def cost(payloads, k):
        payloads = np.asarray(payloads)
        z = start[payloads, 2] if lam == 0 else goal[payloads, 2]
        return np.where(payloads < n, np.abs(z - k // cap), 0)

    matchings = order_matchings(graph, config.matching_mode, cost)
    mid_z = np.empty(N, dtype=np.int64)
    for k, m in enumerate(matchings):
        for _, agent in m:
            mid_z[agent] = k // cap
    offs = np.array(pattern.h_slots)

    # z-shuffle 1: settle into colour columns, then travel along the slabs
    pil = pillar_of(start)
    colour = _column_colouring(pil, start[:, 2], mid_z, m3)
    tgt = start.copy()
    tgt[:, :2] = (start[:, :2] // s) * s + offs[colour]
    p = _settle(pattern, start, tgt)
    p = p.then(_slab_shuffle(grid, pattern, primitive, p.at(p.makespan), mid_z))
    trace.add("zshuffle1", p.subset(keep))
    pos = p.at(p.makespan)

    # final colouring decides each agent's slot column during the layer phase
    colour2 = _column_colouring(pillar_of(goal), pos[:, 2], goal[:, 2], m3)
    xy_goal = (goal[:, :2] // s) * s + offs[colour2]
    traces, groups = [], []
    layer_grid = GridSpec(m1, m2)
    for z in range(m3):
        ids = np.nonzero(pos[:, 2] == z)[0]
        tr = PhaseTrace()
        band_rearrange(BandLayout(layer_grid, pattern, primitive), pos[ids, :2], xy_goal[ids], config, tr)
        traces.append(tr)
        groups.append(ids)
    pos = _stack_layer_traces(traces, groups, N, pos, trace, keep)

    # z-shuffle 2: travel to the goal layer, then settle onto the exact slot
    p = _slab_shuffle(grid, pattern, primitive, pos, goal[:, 2])
    p = p.then(_settle(pattern, p.at(p.makespan), goal))
    trace.add("zshuffle2", p.subset(keep))
    if not np.array_equal(p.at(p.makespan), goal):
        raise RuntimeError("3D rearrangement missed its goal slots")
    trace.add("unlabeled_out", out)
    check_bound("shuffle phases", trace.span(Z_PHASES), shuffle3d_bound(m1, m2, m3, base), config.check_bounds)
    return _finish3d(trace, config)


def _fill_virtual3d(pattern, grid, s1, g1, graph, c2):
    s = pattern.size
    slots = pattern.slot_vertices(grid, HORIZONTAL)
    used_s = {tuple(v) for v in s1.tolist()}
    used_g = {tuple(v) for v in g1.tolist()}
    free_s: dict = {}
    free_g: dict = {}
    for v in slots.tolist():
        key = (v[0] // s) * c2 + v[1] // s
        if tuple(v) not in used_s:
            free_s.setdefault(key, []).append(v)
        if tuple(v) not in used_g:
            free_g.setdefault(key, []).append(v)
    n = len(s1)
    extra = sorted((p, l, r) for l, r, p in graph.edges if p >= n)
    vs = np.array([free_s[r].pop() for _, _, r in extra], dtype=np.int64).reshape(-1, 3)
    vg = np.array([free_g[l].pop() for _, l, _ in extra], dtype=np.int64).reshape(-1, 3)
    return np.concatenate([np.asarray(s1).reshape(-1, 3), vs]), np.concatenate([np.asarray(g1).reshape(-1, 3), vg])


def _finish3d(trace: PhaseTrace, config: SolverConfig):
    plan = trace.concat()
    if config.refine:
        from ..refine import refine

        plan = refine(plan)
    return plan, trace


def _solve_grm3d(instance: Instance, config: SolverConfig):
    """Full density: z-line shuffles, per-layer full-density rearrangement, z-line shuffles."""
    grid = instance.grid
    m1, m2, m3 = grid.shape
    if instance.n != m1 * m2 * m3:
        raise PreconditionError("full density required")
    if m3 < 3:
        raise PreconditionError("requires m3 >= 3")
    start = np.array(instance.starts, dtype=np.int64)
    goal = np.array(instance.goals, dtype=np.int64)
    col = lambda v: v[:, 0] * m2 + v[:, 1]
    graph = build_color_row_graph(col(goal), col(start), m1 * m2, m3)
    lam = config.lba_lambda

    def cost(payloads, k):
        payloads = np.asarray(payloads)
        z = start[payloads, 2] if lam == 0 else goal[payloads, 2]
        return np.abs(z - k)

    mid_z = np.empty(len(start), dtype=np.int64)
    for k, m in enumerate(order_matchings(graph, config.matching_mode, cost)):
        for _, agent in m:
            mid_z[agent] = k
    trace = PhaseTrace()
    trace.add("zshuffle1", _z_lines(start, mid_z, grid))
    pos = trace.phases[-1].plan.at(trace.phases[-1].length)
    sub = SolverConfig(algorithm="grm4", matching_mode=config.matching_mode, lba_lambda=lam, check_bounds=False)
    from .grm import solve_grm

    traces, groups = [], []
    layer = GridSpec(m1, m2)
    for z in range(m3):
        ids = np.nonzero(pos[:, 2] == z)[0]
        inst = Instance(layer, [tuple(v) for v in pos[ids, :2].tolist()], [tuple(v) for v in goal[ids, :2].tolist()])
        _, tr = solve_grm(inst, "block4", sub)
        traces.append(tr)
        groups.append(ids)
    pos = _stack_layer_traces(traces, groups, len(start), pos, trace, np.arange(len(start)))
    trace.add("zshuffle2", _z_lines(pos, goal[:, 2], grid))
    plan = trace.concat()
    check_bound("shuffle phases", plan.makespan, shuffle3d_bound(m1, m2, m3, "grm"), config.check_bounds)
    return _finish3d(trace, config)


def _z_lines(pos: np.ndarray, target_z: np.ndarray, grid: GridSpec) -> Plan:
    """Full-density z-line shuffles, one x-slab (y by z) at a time in parallel."""
    m1, m2, m3 = grid.shape
    pieces = []
    for x in range(m1):
        ids = np.nonzero(pos[:, 0] == x)[0]
        p = full_line_shuffle(pos[ids, 1:], target_z[ids], 0, (m2, m3), 4).paths
        xs = np.full(p.shape[:2] + (1,), x, dtype=np.int64)
        pieces.append((ids, np.concatenate([xs, p], axis=2).transpose(1, 0, 2)))
    traj = compose_parallel_bands(pieces, len(pos), pos)
    return Plan(traj.transpose(1, 0, 2))
