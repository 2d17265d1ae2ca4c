"""Environment, instance and plan data model plus plan validation and metrics.

Coordinates are tuples: ``(x, y)`` in 2D and ``(x, y, z)`` in 3D, with
``x`` the row, ``y`` the column and ``z`` the layer.  Plans are stored
densely as an ``(n, T + 1, dim)`` integer array.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import _kernels

Vertex = tuple


@dataclass(frozen=True)
class GridSpec:
    m1: int
    m2: int
    m3: int = 1
    obstacles: frozenset = frozenset()
    dim: int = field(default=0)

    def __post_init__(self):
        if min(self.m1, self.m2, self.m3) < 1:
            raise ValueError("grid dimensions must be positive")
        dim = self.dim or (3 if self.m3 > 1 else 2)
        object.__setattr__(self, "dim", dim)
        obs = frozenset(tuple(int(c) for c in v) for v in self.obstacles)
        for v in obs:
            if len(v) != dim or not self.in_bounds(v):
                raise ValueError(f"obstacle {v} outside grid")
        if len(obs) >= self.size:
            raise ValueError("obstacles cover the whole grid")
        object.__setattr__(self, "obstacles", obs)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.m1, self.m2) if self.dim == 2 else (self.m1, self.m2, self.m3)

    @property
    def size(self) -> int:
        return self.m1 * self.m2 * self.m3

    @property
    def free_count(self) -> int:
        return self.size - len(self.obstacles)

    def in_bounds(self, v: Sequence[int]) -> bool:
        return all(0 <= c < m for c, m in zip(v, self.shape)) and len(v) == self.dim

    def is_free(self, v: Sequence[int]) -> bool:
        return self.in_bounds(v) and tuple(v) not in self.obstacles

    def neighbors(self, v: Sequence[int]) -> list[Vertex]:
        out = []
        for axis in range(self.dim):
            for d in (-1, 1):
                w = list(v)
                w[axis] += d
                w = tuple(w)
                if self.is_free(w):
                    out.append(w)
        return out

    def free_vertices(self) -> list[Vertex]:
        return [v for v in np.ndindex(*self.shape) if v not in self.obstacles]

    def obstacle_mask(self) -> np.ndarray:
        mask = np.zeros(self.shape, dtype=bool)
        for v in self.obstacles:
            mask[v] = True
        return mask

    def index(self, v: Sequence[int]) -> int:
        return int(np.ravel_multi_index(tuple(v), self.shape))

    def transpose(self) -> "GridSpec":
        """Swap the first two axes (rows <-> columns)."""
        obs = frozenset((v[1], v[0]) + tuple(v[2:]) for v in self.obstacles)
        return GridSpec(self.m2, self.m1, self.m3, obs, self.dim)


@dataclass(frozen=True)
class Instance:
    grid: GridSpec
    starts: tuple
    goals: tuple

    def __post_init__(self):
        starts = tuple(tuple(int(c) for c in v) for v in self.starts)
        goals = tuple(tuple(int(c) for c in v) for v in self.goals)
        object.__setattr__(self, "starts", starts)
        object.__setattr__(self, "goals", goals)
        if len(starts) != len(goals):
            raise ValueError("starts and goals differ in length")
        if len(set(starts)) != len(starts):
            raise ValueError("duplicate start vertex")
        if len(set(goals)) != len(goals):
            raise ValueError("duplicate goal vertex")
        for v in starts + goals:
            if not self.grid.is_free(v):
                raise ValueError(f"vertex {v} is out of bounds or blocked")

    @property
    def n(self) -> int:
        return len(self.starts)

    @property
    def density(self) -> float:
        return self.n / self.grid.size

    def manhattan(self) -> np.ndarray:
        if not self.n:
            return np.zeros(0, dtype=np.int64)
        return np.abs(np.array(self.starts) - np.array(self.goals)).sum(axis=1)

    def transpose(self) -> "Instance":
        sw = lambda v: (v[1], v[0]) + tuple(v[2:])
        return Instance(self.grid.transpose(), tuple(map(sw, self.starts)), tuple(map(sw, self.goals)))


class Plan:
    """Dense timed paths, ``paths[i, t]`` is agent ``i``'s vertex at time ``t``."""

    __slots__ = ("_paths",)

    def __init__(self, paths):
        arr = np.array(paths, dtype=np.int64)
        if arr.ndim != 3:
            if arr.size == 0:
                arr = arr.reshape(0, 1, 2)
            else:
                raise ValueError("paths must have shape (n, T+1, dim)")
        arr.setflags(write=False)
        self._paths = arr

    @classmethod
    def stationary(cls, vertices: Sequence[Vertex], dim: int | None = None) -> "Plan":
        if not len(vertices):
            return cls(np.zeros((0, 1, dim or 2), dtype=np.int64))
        return cls(np.asarray(vertices, dtype=np.int64)[:, None, :])

    @property
    def paths(self) -> np.ndarray:
        return self._paths

    @property
    def n(self) -> int:
        return self._paths.shape[0]

    @property
    def makespan(self) -> int:
        return self._paths.shape[1] - 1

    @property
    def dim(self) -> int:
        return self._paths.shape[2]

    def path(self, i: int) -> list[Vertex]:
        return [tuple(int(c) for c in v) for v in self._paths[i]]

    def at(self, t: int) -> np.ndarray:
        return self._paths[:, min(t, self.makespan)]

    def __eq__(self, other):
        return isinstance(other, Plan) and np.array_equal(self._paths, other._paths)

    def __repr__(self):
        return f"Plan(n={self.n}, makespan={self.makespan})"

    def trimmed(self) -> "Plan":
        """Drop trailing time steps in which nobody moves."""
        p = self._paths
        if p.shape[0] == 0:
            return Plan(p[:, :1])
        final = p[:, -1:]
        same = np.all(p == final, axis=(0, 2))
        T = p.shape[1] - 1
        while T > 0 and same[T - 1]:
            T -= 1
        return Plan(p[:, : T + 1])

    def padded(self, makespan: int) -> "Plan":
        p = self._paths
        extra = makespan - self.makespan
        if extra < 0:
            raise ValueError("cannot pad to a shorter makespan")
        if extra == 0:
            return self
        tail = np.repeat(p[:, -1:], extra, axis=1)
        return Plan(np.concatenate([p, tail], axis=1))

    def then(self, other: "Plan") -> "Plan":
        """Concatenate ``other`` after this plan (its first frame must match our last)."""
        if other.n != self.n:
            raise ValueError("agent count mismatch")
        if not np.array_equal(self._paths[:, -1], other._paths[:, 0]):
            raise ValueError("plans do not join")
        return Plan(np.concatenate([self._paths, other._paths[:, 1:]], axis=1))

    def reversed(self) -> "Plan":
        return Plan(self._paths[:, ::-1])

    def subset(self, agents: Sequence[int]) -> "Plan":
        return Plan(self._paths[np.asarray(agents, dtype=np.int64)])

    def transpose_axes(self) -> "Plan":
        p = self._paths.copy()
        p[:, :, [0, 1]] = p[:, :, [1, 0]]
        return Plan(p)

    def to_json(self) -> str:
        doc = {
            "makespan": self.makespan,
            "agents": [{"id": i, "path": self._paths[i].tolist()} for i in range(self.n)],
        }
        return json.dumps(doc, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "Plan":
        doc = json.loads(text)
        agents = sorted(doc["agents"], key=lambda a: a["id"])
        if not agents:
            return cls(np.zeros((0, int(doc.get("makespan", 0)) + 1, 2), dtype=np.int64))
        paths = [a["path"] for a in agents]
        T = max(len(p) for p in paths)
        paths = [p + [p[-1]] * (T - len(p)) for p in paths]
        return cls(paths)


@dataclass(frozen=True)
class Violation:
    kind: str
    time: int
    agents: tuple
    vertices: tuple


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.violations

    def kinds(self) -> set:
        return {v.kind for v in self.violations}

    def __bool__(self):
        return self.valid


def validate_plan(grid: GridSpec, instance: Instance, plan: Plan) -> ValidationReport:
    """Check a plan against every feasibility condition; never raises."""
    report = ValidationReport()
    add = report.violations.append
    if plan.n != instance.n:
        add(Violation("agent_count", 0, (), (plan.n, instance.n)))
        return report
    if instance.n == 0:
        return report
    P = plan.paths
    if P.shape[2] != grid.dim:
        add(Violation("dimension", 0, (), (P.shape[2], grid.dim)))
        return report
    T = plan.makespan
    for i in range(instance.n):
        if tuple(P[i, 0]) != instance.starts[i]:
            add(Violation("start_mismatch", 0, (i,), (tuple(P[i, 0].tolist()), instance.starts[i])))
        if tuple(P[i, T]) != instance.goals[i]:
            add(Violation("goal_mismatch", T, (i,), (tuple(P[i, T].tolist()), instance.goals[i])))

    shape = np.array(grid.shape)
    inside = np.all((P >= 0) & (P < shape), axis=2)
    for i, t in zip(*np.nonzero(~inside)):
        add(Violation("out_of_bounds", int(t), (int(i),), (tuple(P[i, t].tolist()),)))
    if not inside.all():
        return report

    if grid.obstacles:
        mask = grid.obstacle_mask()
        hit = mask[tuple(P[:, :, a] for a in range(grid.dim))]
        for i, t in zip(*np.nonzero(hit)):
            add(Violation("obstacle", int(t), (int(i),), (tuple(P[i, t].tolist()),)))

    if T:
        step = np.abs(np.diff(P, axis=1)).sum(axis=2)
        for i, t in zip(*np.nonzero(step > 1)):
            add(Violation("non_adjacent", int(t), (int(i),), (tuple(P[i, t].tolist()), tuple(P[i, t + 1].tolist()))))

    ids = np.ravel_multi_index(tuple(P[:, :, a] for a in range(grid.dim)), grid.shape).T
    for kind, t, i, j in _kernels.plan_conflicts(ids):
        kind = "vertex_collision" if kind == "vertex" else "swap_collision"
        verts = (tuple(P[i, t].tolist()), tuple(P[j, t].tolist()))
        add(Violation(kind, int(t), (int(i), int(j)), verts))
    return report


@dataclass(frozen=True)
class Metrics:
    makespan: int
    soc: int
    manhattan_lb: int
    optimality_ratio: float | None

    @property
    def ratio_defined(self) -> bool:
        return self.optimality_ratio is not None


def arrival_times(instance: Instance, plan: Plan) -> np.ndarray:
    """Per agent, the first time from which it rests at its goal for good."""
    P = plan.paths
    if P.shape[0] == 0:
        return np.zeros(0, dtype=np.int64)
    goals = np.asarray(instance.goals)[:, None, :]
    away = np.any(P != goals, axis=2)
    T = P.shape[1]
    last_away = T - 1 - np.argmax(away[:, ::-1], axis=1)
    return np.where(away.any(axis=1), last_away + 1, 0)


def compute_metrics(instance: Instance, plan: Plan) -> Metrics:
    arrivals = arrival_times(instance, plan)
    makespan = int(arrivals.max()) if arrivals.size else 0
    soc = int(arrivals.sum())
    lb = int(instance.manhattan().max()) if instance.n else 0
    if lb > 0:
        ratio = makespan / lb
    elif makespan == 0:
        ratio = 1.0
    else:
        ratio = None
    return Metrics(makespan, soc, lb, ratio)


def stack_positions(frames: Iterable[np.ndarray]) -> Plan:
    """Build a plan from a sequence of (n, dim) position frames."""
    return Plan(np.stack(list(frames), axis=1))
