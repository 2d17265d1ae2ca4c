"""End-to-end rearrangement pipelines."""
from __future__ import annotations

from ..grid import Instance
from .common import BoundExceeded, PhaseTrace, PreconditionError, SolverConfig
from .grid3d import solve_3d
from .grm import solve_grm
from .sparse import solve_arbitrary_half, solve_grh, solve_grlm

__all__ = [
    "BoundExceeded",
    "PhaseTrace",
    "PreconditionError",
    "SolverConfig",
    "solve",
    "solve_3d",
    "solve_arbitrary_half",
    "solve_grh",
    "solve_grlm",
    "solve_grm",
]

_BASE_3D = {"grm2": "grm", "grm4": "grm", "grh": "grh", "grlm": "grlm", "arbitrary_half": "grh"}


def solve(instance: Instance, config: SolverConfig):
    """Dispatch on ``config.algorithm``; returns ``(plan, trace)``."""
    if instance.grid.dim == 3 or config.dimension == 3:
        return solve_3d(instance, _BASE_3D[config.algorithm], config)
    algo = config.algorithm
    if algo in ("grm2", "grm4"):
        plan, trace = solve_grm(instance, "block2" if algo == "grm2" else "block4", config)
        if config.refine:
            from ..refine import refine

            plan = refine(plan)
        return plan, trace
    if algo == "grh":
        return solve_grh(instance, config)
    if algo == "grlm":
        return solve_grlm(instance, config)
    return solve_arbitrary_half(instance, config)
