"""Unlabeled reconfiguration: slot patterns, target selection, max-flow routing."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.sparse import coo_matrix, csr_matrix
from scipy.sparse.csgraph import dijkstra, maximum_flow

from .grid import GridSpec, Plan
from .matching import lba_bottleneck_matching
from .oracle import optimal_makespan_unlabeled

HORIZONTAL = "h"
VERTICAL = "v"


@dataclass(frozen=True)
class CellPattern:
    """Square cells tiling the leading corner of a grid, with resting slots.

    ``h_slots``/``v_slots`` are cell-local offsets for the two orientations.
    Cells cover ``(m1 // size) x (m2 // size)``; residual rows and columns
    hold no slots.
    """

    size: int
    h_slots: tuple
    v_slots: tuple
    center_blocked: bool = False

    @property
    def capacity(self) -> int:
        return len(self.h_slots)

    def slots(self, orientation: str) -> tuple:
        return self.h_slots if orientation == HORIZONTAL else self.v_slots

    def cells(self, grid: GridSpec) -> tuple[int, int]:
        return grid.m1 // self.size, grid.m2 // self.size

    def slot_vertices(self, grid: GridSpec, orientation: str) -> np.ndarray:
        """Every slot of every cell (and every layer in 3D), row-major by cell."""
        c1, c2 = self.cells(grid)
        off = np.array(self.slots(orientation))
        base = np.stack(np.meshgrid(np.arange(c1), np.arange(c2), indexing="ij"), -1).reshape(-1, 2) * self.size
        xy = (base[:, None, :] + off[None]).reshape(-1, 2)
        if grid.dim == 2:
            return xy
        z = np.repeat(np.arange(grid.m3), len(xy))
        return np.concatenate([np.tile(xy, (grid.m3, 1)), z[:, None]], axis=1)

    def cell_of(self, v: np.ndarray) -> np.ndarray:
        return np.asarray(v)[..., :2] // self.size


THIRD = CellPattern(3, ((1, 0), (1, 1), (1, 2)), ((0, 1), (1, 1), (2, 1)))
THIRD_BLOCKED = CellPattern(3, ((1, 0), (1, 2)), ((0, 1), (2, 1)), True)
HALF = CellPattern(2, ((0, 0), (0, 1)), ((0, 0), (1, 0)))


def cell_centers(m1: int, m2: int) -> frozenset:
    return frozenset((3 * i + 1, 3 * j + 1) for i in range(m1 // 3) for j in range(m2 // 3))


def third_pattern(grid: GridSpec) -> CellPattern:
    """The 3x3 pattern matching the grid's obstacles (none, or every cell center)."""
    if not grid.obstacles:
        return THIRD
    if grid.dim == 2 and grid.obstacles == cell_centers(grid.m1, grid.m2):
        return THIRD_BLOCKED
    raise ValueError("obstacles must sit exactly on every 3x3 cell center")


# ------------------------------------------------------------------ graph


@dataclass(frozen=True)
class _GridGraph:
    verts: np.ndarray  # (V, dim)
    index: np.ndarray  # grid-shaped, -1 on obstacles
    edges: np.ndarray  # (E, 2) undirected, u < v
    adj: csr_matrix


@lru_cache(maxsize=32)
def grid_graph(grid: GridSpec) -> _GridGraph:
    free = ~grid.obstacle_mask()
    index = np.full(grid.shape, -1, dtype=np.int64)
    verts = np.argwhere(free)
    index[tuple(verts.T)] = np.arange(len(verts))
    edges = []
    for axis in range(grid.dim):
        a = np.moveaxis(index, axis, 0)
        u, v = a[:-1].ravel(), a[1:].ravel()
        keep = (u >= 0) & (v >= 0)
        edges.append(np.stack([u[keep], v[keep]], 1))
    edges = np.concatenate(edges) if edges else np.zeros((0, 2), np.int64)
    n = len(verts)
    adj = coo_matrix((np.ones(2 * len(edges)), (np.r_[edges[:, 0], edges[:, 1]], np.r_[edges[:, 1], edges[:, 0]])), shape=(n, n)).tocsr()
    return _GridGraph(verts, index, edges, adj)


def _ids(g: _GridGraph, pts) -> np.ndarray:
    pts = np.asarray(pts, dtype=np.int64).reshape(len(pts), -1)
    if len(pts) == 0:
        return np.zeros(0, dtype=np.int64)
    ids = g.index[tuple(pts.T)]
    if (ids < 0).any():
        raise ValueError("vertex on an obstacle")
    return ids


def _multi_dist(g: _GridGraph, ids: np.ndarray) -> np.ndarray:
    if len(ids) == 0:
        return np.full(len(g.verts), np.inf)
    return dijkstra(g.adj, unweighted=True, indices=ids, min_only=True)


# ---------------------------------------------------------------- targets


def balanced_targets(grid: GridSpec, sources, pattern: CellPattern, orientation: str) -> tuple[np.ndarray, int]:
    """Choose one slot per agent minimizing the largest Manhattan distance.

    Returns ``(targets, bottleneck)`` with ``targets[i]`` the slot for agent
    ``i``.  Obstacle-free slots only; per-cell capacity holds by construction.
    """
    sources = np.asarray(sources, dtype=np.int64)
    slots = pattern.slot_vertices(grid, orientation)
    slots = slots[[grid.is_free(tuple(v)) for v in slots]] if grid.obstacles else slots
    if len(sources) > len(slots):
        raise ValueError(f"{len(sources)} agents exceed the {len(slots)} available slots")
    if len(sources) == 0:
        return np.zeros((0, grid.dim), np.int64), 0
    cost = np.abs(sources[:, None, :] - slots[None, :, :]).sum(axis=2)
    assign, b = lba_bottleneck_matching(cost)
    return slots[assign], b


# ---------------------------------------------------------------- routing


class Unreachable(ValueError):
    pass


def unlabeled_route(grid: GridSpec, sources, targets, min_horizon: int = 0, max_horizon: int | None = None) -> Plan:
    """Move agents from ``sources`` onto the vertex set ``targets``.

    Scans the horizon upward from a distance lower bound and returns the
    first feasible plan, decoded from an integral max flow over the
    time-expanded graph.  Agent ``i`` starts at ``sources[i]``.
    """
    g = grid_graph(grid)
    src = _ids(g, sources)
    dst = _ids(g, targets)
    if len(src) != len(dst):
        raise ValueError("source and target counts differ")
    n = len(src)
    if n == 0:
        return Plan.stationary([], grid.dim)
    if set(src.tolist()) == set(dst.tolist()):
        return Plan.stationary(g.verts[src], grid.dim)
    ds = _multi_dist(g, src)
    dt = _multi_dist(g, dst)
    if not np.isfinite(dt[src]).all() or not np.isfinite(ds[dst]).all():
        raise Unreachable("some source cannot reach any target")
    T = max(int(dt[src].max()), int(ds[dst].max()), min_horizon, 1)
    limit = max_horizon if max_horizon is not None else T + 4 * sum(grid.shape)
    while T <= limit:
        paths = _route_horizon(g, src, dst, ds, dt, T)
        if paths is not None:
            return Plan(g.verts[paths])
        T += 1
    raise Unreachable(f"no plan within horizon {limit}")


def _route_horizon(g: _GridGraph, src, dst, ds, dt, T: int):
    """Max flow for horizon ``T``; returns ``(n, T + 1)`` vertex ids or None."""
    V = len(g.verts)
    n = len(src)
    alive = [(ds <= t) & (dt <= T - t) for t in range(T + 1)]
    node = 2  # 0 source, 1 sink
    vin = np.full((T + 1, V), -1, dtype=np.int64)
    for t in range(T + 1):
        k = int(alive[t].sum())
        vin[t, alive[t]] = node + 2 * np.arange(k)
        node += 2 * k
    rows, cols = [], []

    def arc(a, b):
        rows.append(np.asarray(a, dtype=np.int64).ravel())
        cols.append(np.asarray(b, dtype=np.int64).ravel())

    for t in range(T + 1):
        ok = np.nonzero(alive[t])[0]
        arc(vin[t, ok], vin[t, ok] + 1)  # vertex capacity
    arc(np.zeros(n, np.int64), vin[0, src])
    arc(vin[T, dst] + 1, np.ones(n, np.int64))
    eu, ev = g.edges[:, 0], g.edges[:, 1]
    for t in range(T):
        ok = alive[t] & alive[t + 1]
        w = np.nonzero(ok)[0]
        arc(vin[t, w] + 1, vin[t + 1, w])  # wait
        # merge-split gadget: at most one traversal per edge per step
        e = np.nonzero((alive[t][eu] | alive[t][ev]) & (alive[t + 1][eu] | alive[t + 1][ev]))[0]
        if len(e) == 0:
            continue
        a = node + 2 * np.arange(len(e))
        b = a + 1
        node += 2 * len(e)
        arc(a, b)
        for x, y in ((eu, ev), (ev, eu)):
            xs = x[e]
            m = alive[t][xs]
            arc(vin[t, xs[m]] + 1, a[m])  # leave x
            m2 = alive[t + 1][y[e]]
            arc(b[m2], vin[t + 1, y[e][m2]])  # enter y
    r = np.concatenate(rows)
    c = np.concatenate(cols)
    cap = csr_matrix((np.ones(len(r), dtype=np.int32), (r, c)), shape=(node, node))
    cap.sum_duplicates()
    cap.data[:] = 1
    res = maximum_flow(cap, 0, 1, method="dinic")
    if res.flow_value < n:
        return None
    flow = res.flow.tocsr()
    flow.eliminate_zeros()
    nxt = {}
    indptr, indices, data = flow.indptr, flow.indices, flow.data
    for u in range(node):
        for k in range(indptr[u], indptr[u + 1]):
            if data[k] > 0:
                nxt.setdefault(u, []).append(int(indices[k]))
    # map node -> (t, vertex) for vertex-in nodes
    where = {}
    for t in range(T + 1):
        ok = np.nonzero(alive[t])[0]
        for v, idn in zip(ok.tolist(), vin[t, ok].tolist()):
            where[idn] = (t, v)
    paths = np.empty((n, T + 1), dtype=np.int64)
    for i, s in enumerate(src.tolist()):
        u = int(vin[0, s])
        for t in range(T + 1):
            paths[i, t] = where[u][1]
            if t == T:
                break
            u = nxt[u][0]  # in -> out
            step = nxt[u].pop()
            while step not in where:  # through a gadget
                step = nxt[step].pop()
            u = step
    return paths


# -------------------------------------------------------------- recentering


@lru_cache(maxsize=None)
def _cell_move(pattern: CellPattern, occupied: tuple, orientation: str) -> tuple[int, tuple]:
    """Best local plan taking ``occupied`` cell offsets onto some slot subset.

    Returns ``(T, paths)`` with ``paths[k]`` the offsets of agent ``k``.
    """
    obs = frozenset({(1, 1)}) if pattern.center_blocked else frozenset()
    cell = GridSpec(pattern.size, pattern.size, obstacles=obs)
    best = None
    for subset in itertools.combinations(pattern.slots(orientation), len(occupied)):
        T, plan = optimal_makespan_unlabeled(cell, occupied, subset)
        if best is None or T < best[0]:
            best = (T, tuple(map(tuple, plan.paths.tolist())))
    return best


def center_balanced(grid: GridSpec, pattern: CellPattern, positions, orientation: str) -> Plan:
    """Move every agent onto a slot of its own cell, all cells in parallel.

    Each cell is solved optimally by exhaustive search (cached per occupancy
    pattern), so the makespan is the worst cell's optimum.
    """
    pos = np.asarray(positions, dtype=np.int64).reshape(len(positions), -1)
    n = len(pos)
    if n == 0:
        return Plan.stationary([], grid.dim)
    c1, c2 = pattern.cells(grid)
    cell = pos[:, :2] // pattern.size
    if (cell[:, 0] >= c1).any() or (cell[:, 1] >= c2).any():
        raise ValueError("agent outside the cell tiling")
    key = cell[:, 0] * c2 + cell[:, 1]
    if grid.dim == 3:
        key = key + c1 * c2 * pos[:, 2]
    order = np.argsort(key, kind="stable")
    groups = np.split(order, np.nonzero(np.diff(key[order]))[0] + 1)
    local = []
    T = 0
    for g in groups:
        if len(g) > pattern.capacity:
            raise ValueError(f"cell {tuple(cell[g[0]])} holds {len(g)} agents, capacity {pattern.capacity}")
        off = tuple(tuple(int(x) for x in v) for v in pos[g, :2] - cell[g] * pattern.size)
        t, paths = _cell_move(pattern, off, orientation)
        local.append((g, t, paths))
        T = max(T, t)
    out = np.repeat(pos[:, None, :], T + 1, axis=1)
    for g, t, paths in local:
        p = np.asarray(paths, dtype=np.int64).reshape(len(g), t + 1, 2)
        p = np.concatenate([p, np.repeat(p[:, -1:], T - t, axis=1)], axis=1)
        out[g, :, :2] = p + (cell[g] * pattern.size)[:, None, :]
    return Plan(out)
