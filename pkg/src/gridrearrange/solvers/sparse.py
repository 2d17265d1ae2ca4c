"""One-third and one-half density pipelines, plus the arbitrary-instance variant."""
from __future__ import annotations

import numpy as np

from ..grid import Instance, Plan
from ..shuffles import linear_merge_bound
from ..unlabeled import HALF, HORIZONTAL, balanced_targets, third_pattern, unlabeled_route
from .banded import HIGHWAY, MERGE, BandLayout, band_rearrange
from .common import SHUFFLE_PHASES, PhaseTrace, PreconditionError, SolverConfig, check_bound

GRH_SLACK = 18


def _unlabeled_in(grid, points, pattern, max_horizon=None) -> Plan:
    targets, _ = balanced_targets(grid, points, pattern, HORIZONTAL)
    return unlabeled_route(grid, points, targets, max_horizon=max_horizon)


def _pipeline(instance: Instance, layout: BandLayout, config: SolverConfig, horizon_cap=None):
    grid = instance.grid
    trace = PhaseTrace()
    into = _unlabeled_in(grid, instance.starts, layout.pattern, horizon_cap)
    out = _unlabeled_in(grid, instance.goals, layout.pattern, horizon_cap).reversed()
    trace.add("unlabeled_in", into)
    band_rearrange(layout, into.at(into.makespan), out.at(0), config, trace)
    trace.add("unlabeled_out", out)
    return trace


def _finish(trace: PhaseTrace, config: SolverConfig):
    plan = trace.concat()
    if config.refine:
        from ..refine import refine

        plan = refine(plan)
    return plan, trace


def grh_shuffle_bound(m1: int, m2: int) -> int:
    return m1 + 2 * m2 + GRH_SLACK


def grlm_shuffle_bound(m1: int, m2: int) -> int:
    return 2 * linear_merge_bound(m2) + linear_merge_bound(m1) + 4


def _transposed(solver, instance: Instance, config: SolverConfig):
    plan, trace = solver(instance.transpose(), config, _inner=True)
    for ph in trace.phases:
        ph.plan = ph.plan.transpose_axes()
    return plan.transpose_axes(), trace


def solve_grh(instance: Instance, config: SolverConfig | None = None, _inner: bool = False):
    """Route a sparse instance (at most one agent per three cells' worth of slots).

    Returns ``(plan, trace)``.  With ``config.transpose`` the schedule runs
    column, row, column instead.
    """
    config = config or SolverConfig(algorithm="grh")
    if config.transpose and not _inner:
        return _transposed(solve_grh, instance, config)
    grid = instance.grid
    if grid.dim != 2:
        raise PreconditionError("use solve_3d for 3D grids")
    try:
        pattern = third_pattern(grid)
    except ValueError as e:
        raise PreconditionError(str(e)) from None
    c1, c2 = pattern.cells(grid)
    cap = c1 * c2 * pattern.capacity
    if c1 == 0 or c2 == 0 or instance.n > cap:
        raise PreconditionError(f"{instance.n} agents exceed the {cap} slots of the 3x3 cell pattern")
    trace = _pipeline(instance, BandLayout(grid, pattern, HIGHWAY), config)
    check_bound("shuffle phases", trace.span(SHUFFLE_PHASES), grh_shuffle_bound(grid.m1, grid.m2), config.check_bounds)
    return _finish(trace, config)


def solve_grlm(instance: Instance, config: SolverConfig | None = None, _inner: bool = False):
    """Route an instance at up to one-half density with linear merges."""
    config = config or SolverConfig(algorithm="grlm")
    if config.transpose and not _inner:
        return _transposed(solve_grlm, instance, config)
    grid = instance.grid
    if grid.dim != 2 or grid.obstacles:
        raise PreconditionError("half-density solver needs an obstacle-free 2D grid")
    if grid.m1 % 2 or grid.m2 % 2:
        raise PreconditionError("both grid sides must be even")
    if instance.n > grid.m1 * grid.m2 // 2:
        raise PreconditionError("more than half the vertices are occupied")
    trace = _pipeline(instance, BandLayout(grid, HALF, MERGE), config)
    check_bound("shuffle phases", trace.span(SHUFFLE_PHASES), grlm_shuffle_bound(grid.m1, grid.m2), config.check_bounds)
    return _finish(trace, config)


def solve_arbitrary_half(instance: Instance, config: SolverConfig | None = None):
    """Any instance up to one-half density.

    Uses the one-third machinery when the agents fit its slots and the
    linear-merge pipeline otherwise.  Each unlabeled phase is capped at
    ``m1 + m2`` steps.
    """
    config = config or SolverConfig(algorithm="arbitrary_half")
    grid = instance.grid
    if instance.n > grid.m1 * grid.m2 // 2:
        raise PreconditionError("more than half the vertices are occupied")
    cap = grid.m1 + grid.m2
    try:
        pattern = third_pattern(grid)
        fits = instance.n <= np.prod(pattern.cells(grid)) * pattern.capacity
    except ValueError:
        fits = False
    if fits:
        layout = BandLayout(grid, pattern, HIGHWAY)
        bound = grh_shuffle_bound(grid.m1, grid.m2)
    else:
        if grid.obstacles or grid.m1 % 2 or grid.m2 % 2:
            raise PreconditionError("instance fits neither the one-third nor the one-half layout")
        layout = BandLayout(grid, HALF, MERGE)
        bound = grlm_shuffle_bound(grid.m1, grid.m2)
    trace = _pipeline(instance, layout, config, horizon_cap=cap)
    check_bound("shuffle phases", trace.span(SHUFFLE_PHASES), bound, config.check_bounds)
    return _finish(trace, config)
