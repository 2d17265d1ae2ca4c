"""Shared solver types: configuration, phase traces and matching helpers."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..grid import Plan
from ..matching import (
    BipartiteMultigraph,
    decompose_regular_multigraph,
    lba_assign_matchings,
    lba_greedy_per_row,
)

ALGORITHMS = ("grm2", "grm4", "grh", "grlm", "arbitrary_half")
MATCHING_MODES = ("hall", "lba")


class PreconditionError(ValueError):
    """The instance does not fit the chosen algorithm."""


class BoundExceeded(AssertionError):
    """A phase ran longer than its asserted makespan bound."""


@dataclass(frozen=True)
class SolverConfig:
    algorithm: str = "grh"
    dimension: int = 2
    matching_mode: str = "lba"
    refine: bool = False
    seed: int = 0
    lba_lambda: int = 0  # 0: optimize the first shuffle phase, 1: the third
    transpose: bool = False  # column-row-column schedule
    check_bounds: bool = True

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.matching_mode not in MATCHING_MODES:
            raise ValueError(f"unknown matching mode {self.matching_mode!r}")
        if self.dimension not in (2, 3):
            raise ValueError("dimension must be 2 or 3")
        if self.lba_lambda not in (0, 1):
            raise ValueError("lba_lambda must be 0 or 1")


@dataclass
class Phase:
    name: str
    offset: int
    plan: Plan

    @property
    def length(self) -> int:
        return self.plan.makespan


SHUFFLE_PHASES = ("shuffle1", "recenter1", "shuffle2", "recenter2", "shuffle3")


@dataclass
class PhaseTrace:
    phases: list = field(default_factory=list)

    def add(self, name: str, plan: Plan) -> None:
        off = self.phases[-1].offset + self.phases[-1].length if self.phases else 0
        self.phases.append(Phase(name, off, plan))

    def __getitem__(self, name: str) -> Phase:
        for p in self.phases:
            if p.name == name:
                return p
        raise KeyError(name)

    def names(self) -> list[str]:
        return [p.name for p in self.phases]

    def span(self, names) -> int:
        return sum(p.length for p in self.phases if p.name in names)

    @property
    def shuffle_span(self) -> int:
        """Steps spent between the two unlabeled phases."""
        return sum(p.length for p in self.phases if not p.name.startswith("unlabeled"))

    def concat(self) -> Plan:
        plan = self.phases[0].plan
        for p in self.phases[1:]:
            plan = plan.then(p.plan)
        return plan


def order_matchings(
    graph: BipartiteMultigraph,
    mode: str,
    cost: Callable[[np.ndarray, int], np.ndarray],
) -> list[list]:
    """Matchings listed by intermediate position.

    ``hall`` keeps the decomposition order.  ``lba`` takes both the plain
    decomposition and a position-by-position bottleneck construction,
    permutes each onto positions by bottleneck assignment and keeps the one
    with the smaller worst cost, so it never does worse than ``hall``.
    """
    plain = decompose_regular_multigraph(graph)
    if mode == "hall":
        return plain.matchings
    best = None
    for ms in (lba_greedy_per_row(graph, cost), plain):
        perm = lba_assign_matchings(ms, cost)
        slots = [None] * len(ms)
        for k, pos in enumerate(perm):
            slots[pos] = ms.matchings[k]
        worst = matching_bottleneck(slots, cost)
        if best is None or worst < best[0]:
            best = (worst, slots)
    return best[1]


def matching_bottleneck(matchings: list, cost: Callable[[np.ndarray, int], np.ndarray]) -> int:
    """Largest cost over all agents of position-ordered ``matchings``."""
    return max((int(np.max(cost(np.array([p for _, p in m]), k))) for k, m in enumerate(matchings) if m), default=0)


def check_bound(name: str, value: int, bound: int, enabled: bool = True) -> None:
    if enabled and value > bound:
        raise BoundExceeded(f"{name} took {value} steps, bound {bound}")
