"""Exhaustive optimal solvers for tiny instances.

Breadth-first search over joint configurations with synchronous moves; used
as ground truth for the heuristics and to certify the swap tables.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from math import perm
from typing import Sequence

import numpy as np

from .grid import GridSpec, Instance, Plan


class SearchTooLarge(RuntimeError):
    """The requested search exceeds the configured limits."""


@dataclass(frozen=True)
class Limits:
    max_states: int = 2_000_000
    max_depth: int = 64


class _Graph:
    def __init__(self, grid: GridSpec):
        self.grid = grid
        self.verts = grid.free_vertices()
        self.index = {v: k for k, v in enumerate(self.verts)}
        self.adj = [[self.index[w] for w in grid.neighbors(v)] for v in self.verts]


def simple_cycles(adj: Sequence[Sequence[int]]) -> list[tuple[int, ...]]:
    """All directed simple cycles (length >= 3) of an undirected graph.

    Each undirected cycle appears once per orientation; a cycle is listed
    starting from its smallest vertex.
    """
    out = []
    n = len(adj)
    for s in range(n):
        stack = [(s, [s])]
        while stack:
            v, path = stack.pop()
            for w in sorted(adj[v], reverse=True):
                if w == s and len(path) >= 3:
                    out.append(tuple(path))
                elif w > s and w not in path:
                    stack.append((w, path + [w]))
    out.sort(key=lambda c: (len(c), c))
    return out


def rotation_moves(adj: Sequence[Sequence[int]]) -> list[tuple[int, ...]]:
    """Every non-empty set of vertex-disjoint cycle rotations, as cell maps.

    ``move[c]`` is where the content of cell ``c`` goes.  These are exactly
    the synchronous moves available when every vertex is occupied.
    """
    cycles = simple_cycles(adj)
    n = len(adj)
    masks = [sum(1 << v for v in c) for c in cycles]
    combos: list[tuple[int, ...]] = []

    def extend(start: int, used: int, chosen: list[int]):
        for k in range(start, len(cycles)):
            if masks[k] & used:
                continue
            chosen.append(k)
            combos.append(tuple(chosen))
            extend(k + 1, used | masks[k], chosen)
            chosen.pop()

    extend(0, 0, [])
    moves = []
    for combo in combos:
        mv = list(range(n))
        for k in combo:
            c = cycles[k]
            for a, b in zip(c, c[1:] + c[:1]):
                mv[a] = b
        moves.append(tuple(mv))
    return moves


def _free_moves(graph: _Graph, state: tuple[int, ...]):
    """Synchronous joint moves for agents at ``state`` (rests allowed)."""
    n = len(state)
    occupant = {v: i for i, v in enumerate(state)}
    options = [[v] + graph.adj[v] for v in state]
    target = [0] * n
    taken: set[int] = set()

    def rec(i: int):
        if i == n:
            yield tuple(target)
            return
        u = state[i]
        for v in options[i]:
            if v in taken:
                continue
            if v != u:
                j = occupant.get(v)
                if j is not None and j < i and target[j] == u:
                    continue
            target[i] = v
            taken.add(v)
            yield from rec(i + 1)
            taken.discard(v)

    yield from rec(0)


def _successors(graph: _Graph, state, full_moves):
    if full_moves is not None:
        for mv in full_moves:
            yield tuple(mv[v] for v in state)
    else:
        yield from _free_moves(graph, state)


def _check_size(n_free: int, n: int, limits: Limits):
    if perm(n_free, n) > limits.max_states:
        raise SearchTooLarge(f"{perm(n_free, n)} joint states exceed the limit")


def optimal_makespan_labeled(grid: GridSpec, instance: Instance, limits: Limits = Limits()) -> tuple[int, Plan]:
    """Makespan-optimal labeled plan by BFS over joint states."""
    graph = _Graph(grid)
    n = instance.n
    if n == 0:
        return 0, Plan.stationary([], grid.dim)
    _check_size(len(graph.verts), n, limits)
    start = tuple(graph.index[v] for v in instance.starts)
    goal = tuple(graph.index[v] for v in instance.goals)
    full = rotation_moves(graph.adj) if n == len(graph.verts) else None
    parent = {start: None}
    frontier = [start]
    depth = 0
    while goal not in parent:
        if not frontier:
            raise ValueError("instance is infeasible")
        depth += 1
        if depth > limits.max_depth:
            raise SearchTooLarge("depth limit reached")
        nxt = []
        for s in frontier:
            for c in _successors(graph, s, full):
                if c not in parent:
                    parent[c] = s
                    nxt.append(c)
                    if len(parent) > limits.max_states:
                        raise SearchTooLarge("state limit reached")
        frontier = nxt
    seq = [goal]
    while parent[seq[-1]] is not None:
        seq.append(parent[seq[-1]])
    seq.reverse()
    paths = np.array([[graph.verts[v] for v in s] for s in seq], dtype=np.int64).transpose(1, 0, 2)
    return len(seq) - 1, Plan(paths)


def optimal_makespan_unlabeled(
    grid: GridSpec,
    sources: Sequence,
    targets: Sequence,
    limits: Limits = Limits(),
) -> tuple[int, Plan]:
    """Optimal unlabeled makespan by BFS over vertex subsets.

    The returned witness plan is labeled by the order of ``sources``; each
    agent ends on some target.
    """
    if len(sources) != len(targets):
        raise ValueError("source/target counts differ")
    graph = _Graph(grid)
    n = len(sources)
    if n == 0:
        return 0, Plan.stationary([], grid.dim)
    src = tuple(graph.index[tuple(v)] for v in sources)
    goal = tuple(sorted(graph.index[tuple(v)] for v in targets))
    root = tuple(sorted(src))
    # parent maps a sorted state to (parent sorted state, move as sorted->positions)
    parent: dict = {root: None}
    frontier = [root]
    depth = 0
    while goal not in parent:
        if not frontier:
            raise ValueError("targets unreachable")
        depth += 1
        if depth > limits.max_depth:
            raise SearchTooLarge("depth limit reached")
        nxt = []
        for s in frontier:
            for moved in _free_moves(graph, s):
                c = tuple(sorted(moved))
                if c not in parent:
                    parent[c] = (s, moved)
                    nxt.append(c)
                    if len(parent) > limits.max_states:
                        raise SearchTooLarge("state limit reached")
        frontier = nxt
    chain = []
    s = goal
    while parent[s] is not None:
        prev, moved = parent[s]
        chain.append((prev, moved))
        s = prev
    chain.reverse()
    pos = list(src)
    frames = [list(pos)]
    for prev, moved in chain:
        step = dict(zip(prev, moved))
        pos = [step[v] for v in pos]
        frames.append(list(pos))
    paths = np.array([[graph.verts[v] for v in f] for f in frames], dtype=np.int64).transpose(1, 0, 2)
    return depth, Plan(paths)
