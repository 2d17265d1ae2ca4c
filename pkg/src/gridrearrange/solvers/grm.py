"""Full-density solver: three rounds of parallel line shuffles."""
from __future__ import annotations

import numpy as np

from ..grid import Instance, Plan
from ..matching import build_color_row_graph
from ..shuffles import parallel_row_shuffle_full
from .common import PhaseTrace, PreconditionError, SolverConfig, check_bound, order_matchings


def grm_bound(m1: int, m2: int, block: int) -> int:
    return (7 if block == 2 else 4) * (m1 + 2 * m2) + 24


def full_line_shuffle(pos: np.ndarray, target: np.ndarray, axis: int, shape, block: int) -> Plan:
    """Shuffle every full line along ``axis`` (0: rows, 1: columns) at once.

    ``target[i]`` is agent ``i``'s final coordinate along its line.
    """
    line_ax = 0 if axis == 0 else 1
    L, m = shape[line_ax], shape[1 - line_ax]
    line = pos[:, line_ax]
    p = pos[:, 1 - line_ax]
    targets = np.empty((L, m), dtype=np.int64)
    targets[line, p] = target
    traj = parallel_row_shuffle_full(targets, block)[:, line * m + p]
    if line_ax == 1:
        traj = traj[..., ::-1]
    return Plan(traj.transpose(1, 0, 2))


def solve_grm(instance: Instance, variant: str = "block4", config: SolverConfig | None = None):
    """Route a full-density instance; returns ``(plan, trace)``."""
    config = config or SolverConfig(algorithm="grm4" if variant == "block4" else "grm2")
    block = {"block2": 2, "block4": 4}.get(variant)
    if block is None:
        raise ValueError(f"unknown variant {variant!r}")
    grid = instance.grid
    if grid.dim != 2 or grid.obstacles:
        raise PreconditionError("full-density solver needs an obstacle-free 2D grid")
    m1, m2 = grid.m1, grid.m2
    if instance.n != m1 * m2:
        raise PreconditionError(f"{instance.n} agents on {m1}x{m2}: full density required")
    if not m1 >= m2 >= 3:
        raise PreconditionError("requires m1 >= m2 >= 3")
    start = np.array(instance.starts, dtype=np.int64)
    goal = np.array(instance.goals, dtype=np.int64)

    graph = build_color_row_graph(goal[:, 0], start[:, 0], m1, m2)
    lam = config.lba_lambda

    def cost(payloads, k):
        payloads = np.asarray(payloads)
        col = start[payloads, 1] if lam == 0 else goal[payloads, 1]
        return np.abs(col - k)

    matchings = order_matchings(graph, config.matching_mode, cost)
    mid_col = np.empty(instance.n, dtype=np.int64)
    for k, m in enumerate(matchings):
        for _, agent in m:
            mid_col[agent] = k

    trace = PhaseTrace()
    shape = (m1, m2)
    p1 = full_line_shuffle(start, mid_col, 0, shape, block)
    trace.add("shuffle1", p1)
    p2 = full_line_shuffle(p1.at(p1.makespan), goal[:, 0], 1, shape, block)
    trace.add("shuffle2", p2)
    p3 = full_line_shuffle(p2.at(p2.makespan), goal[:, 1], 0, shape, block)
    trace.add("shuffle3", p3)
    plan = trace.concat()
    check_bound("full-density schedule", plan.makespan, grm_bound(m1, m2, block), config.check_bounds)
    return plan, trace
