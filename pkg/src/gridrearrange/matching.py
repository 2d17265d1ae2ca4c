"""Regular bipartite multigraphs, perfect-matching decomposition and LBA.

Left nodes are colors (goal lines), right nodes are start lines, and every
agent contributes one edge.  At design density the graph is d-regular and
splits into d perfect matchings; matching ``k`` names one agent per start
line, all with distinct colors, that travel to intermediate position ``k``.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

FORBIDDEN = np.iinfo(np.int64).max


class RegularityError(ValueError):
    pass


class InfeasibleAssignment(ValueError):
    pass


@dataclass
class BipartiteMultigraph:
    left_size: int
    right_size: int
    edges: list  # (left, right, payload)
    n_real: int = -1  # payloads >= n_real are virtual fillers

    def degrees(self) -> tuple[np.ndarray, np.ndarray]:
        dl = np.zeros(self.left_size, dtype=np.int64)
        dr = np.zeros(self.right_size, dtype=np.int64)
        for l, r, _ in self.edges:
            dl[l] += 1
            dr[r] += 1
        return dl, dr

    def regular_degree(self) -> int | None:
        dl, dr = self.degrees()
        vals = set(dl.tolist()) | set(dr.tolist())
        return vals.pop() if len(vals) == 1 and self.left_size == self.right_size else None


@dataclass
class MatchingSet:
    matchings: list  # matchings[k][left] = (right, payload)

    def __len__(self):
        return len(self.matchings)

    def payloads(self, k: int) -> list:
        return [p for _, p in self.matchings[k]]


def build_color_row_graph(
    colors: Sequence[int],
    rows: Sequence[int],
    n_lines: int,
    degree: int,
    pad_virtual: bool = True,
) -> BipartiteMultigraph:
    """One edge per agent ``(color, row, agent)``; pad with virtual agents.

    Fillers first pair a deficient row with its own color, then fill the
    remaining row and color deficits in index order.  Virtual payloads are
    numbered from ``len(colors)`` upward.
    """
    colors = np.asarray(colors, dtype=np.int64)
    rows = np.asarray(rows, dtype=np.int64)
    n = len(colors)
    if n and (colors.min() < 0 or colors.max() >= n_lines or rows.min() < 0 or rows.max() >= n_lines):
        raise ValueError("color or row index out of range")
    row_def = degree - np.bincount(rows, minlength=n_lines)
    col_def = degree - np.bincount(colors, minlength=n_lines)
    for name, deficit in (("row", row_def), ("color", col_def)):
        bad = np.nonzero(deficit < 0)[0]
        if bad.size:
            raise RegularityError(f"{name} {int(bad[0])} holds more than {degree} agents")
    edges = [(int(c), int(r), i) for i, (c, r) in enumerate(zip(colors, rows))]
    if pad_virtual:
        nxt = n
        for r in range(n_lines):
            k = min(row_def[r], col_def[r])
            for _ in range(k):
                edges.append((r, r, nxt))
                nxt += 1
            row_def[r] -= k
            col_def[r] -= k
        ci = 0
        for r in range(n_lines):
            while row_def[r]:
                while col_def[ci] == 0:
                    ci += 1
                edges.append((ci, r, nxt))
                nxt += 1
                row_def[r] -= 1
                col_def[ci] -= 1
    return BipartiteMultigraph(n_lines, n_lines, edges, n)


def _hopcroft_karp(adj: list[list[int]], n_left: int, n_right: int, init: list[int] | None = None) -> list[int]:
    """Maximum matching; returns ``match_left[u]`` (or -1).

    ``init`` is an optional partial matching to warm-start from.
    """
    INF = 1 << 30
    ml = [-1] * n_left if init is None else list(init)
    mr = [-1] * n_right
    for u, v in enumerate(ml):
        if v >= 0:
            mr[v] = u
    for u in range(n_left):  # greedy start
        if ml[u] >= 0:
            continue
        for v in adj[u]:
            if mr[v] < 0:
                ml[u], mr[v] = v, u
                break
    while True:
        dist = [INF] * n_left
        q = deque(u for u in range(n_left) if ml[u] < 0)
        for u in q:
            dist[u] = 0
        found = False
        while q:
            u = q.popleft()
            for v in adj[u]:
                w = mr[v]
                if w < 0:
                    found = True
                elif dist[w] == INF:
                    dist[w] = dist[u] + 1
                    q.append(w)
        if not found:
            return ml
        ptr = [0] * n_left

        def augment(root: int) -> bool:
            stack = [root]
            path = []
            while stack:
                u = stack[-1]
                advanced = False
                while ptr[u] < len(adj[u]):
                    v = adj[u][ptr[u]]
                    ptr[u] += 1
                    w = mr[v]
                    if w < 0:
                        path.append((u, v))
                        for a, b in path:
                            ml[a], mr[b] = b, a
                        return True
                    if dist[w] == dist[u] + 1:
                        path.append((u, v))
                        stack.append(w)
                        advanced = True
                        break
                if not advanced:
                    dist[u] = INF
                    stack.pop()
                    if path:
                        path.pop()
            return False

        for u in range(n_left):
            if ml[u] < 0:
                augment(u)


def decompose_regular_multigraph(graph: BipartiteMultigraph) -> MatchingSet:
    """Split a d-regular bipartite multigraph into d perfect matchings."""
    d = graph.regular_degree()
    if not d:
        raise RegularityError("graph is not regular")
    n = graph.left_size
    bucket: dict[tuple[int, int], list] = {}
    for l, r, p in graph.edges:
        bucket.setdefault((l, r), []).append(p)
    for v in bucket.values():
        v.reverse()  # pop() then yields payloads in insertion order
    out = []
    for _ in range(d):
        adj = [[] for _ in range(n)]
        for l, r in bucket:
            adj[l].append(r)
        ml = _hopcroft_karp(adj, n, n)
        if min(ml) < 0:
            raise AssertionError("residual graph lost its perfect matching")
        m = []
        for l, r in enumerate(ml):
            items = bucket[(l, r)]
            m.append((r, items.pop()))
            if not items:
                del bucket[(l, r)]
        out.append(m)
    return MatchingSet(out)


def audit_matchings(graph: BipartiteMultigraph, ms: MatchingSet) -> None:
    """Raise unless ``ms`` is a disjoint perfect-matching cover of ``graph``."""
    seen = []
    for m in ms.matchings:
        if len(m) != graph.left_size or len({r for r, _ in m}) != graph.right_size:
            raise AssertionError("matching is not a bijection")
        seen.extend((l, r, p) for l, (r, p) in enumerate(m))
    if sorted(seen) != sorted(graph.edges):
        raise AssertionError("matchings do not cover the edge multiset exactly")


# ---------------------------------------------------------------- bottleneck


def _max_matching(mask: np.ndarray, init: list[int] | None) -> list[int]:
    r, c = np.nonzero(mask)
    cuts = np.searchsorted(r, np.arange(mask.shape[0] + 1))
    cl = c.tolist()
    adj = [cl[cuts[u] : cuts[u + 1]] for u in range(mask.shape[0])]
    return _hopcroft_karp(adj, mask.shape[0], mask.shape[1], init)


def lba_bottleneck_matching(costs) -> tuple[np.ndarray, int]:
    """Assignment minimizing the largest selected cost.

    ``costs`` is ``(n_rows, n_cols)`` with ``n_rows <= n_cols``; entries equal
    to ``FORBIDDEN`` (or ``inf`` for float input) cannot be selected.  Returns
    ``(assign, bottleneck)`` with ``assign[row] = col``.
    """
    c = np.asarray(costs)
    if c.dtype.kind == "f":
        ok = np.isfinite(c)
        c = np.where(ok, c, 0).astype(np.int64)
        c[~ok] = FORBIDDEN
    else:
        c = c.astype(np.int64)
    rows, cols = c.shape
    if rows > cols:
        raise ValueError("more rows than columns")
    if rows == 0:
        return np.zeros(0, dtype=np.int64), 0
    allowed = c != FORBIDDEN
    dead = np.nonzero(~allowed.any(axis=1))[0]
    if dead.size:
        raise InfeasibleAssignment(f"row {int(dead[0])} has no admissible column")
    vals = np.unique(c[allowed])
    # every row needs some admissible entry, and so does every column when square
    lb = c.min(axis=1).max()
    if rows == cols:
        lb = max(lb, c.min(axis=0).max())
    lo = int(np.searchsorted(vals, lb))
    # gallop upward while the masks stay sparse, then bisect; the matching of
    # the largest infeasible threshold stays valid above it and warm-starts
    # the next probe
    step, hi, best, warm = 1, None, None, None
    while hi is None:
        probe = min(lo + step - 1, len(vals) - 1)
        m = _max_matching(c <= vals[probe], warm)
        if min(m) >= 0:
            hi, best = probe, m
        elif probe == len(vals) - 1:
            raise InfeasibleAssignment("no complete assignment exists")
        else:
            lo, warm = probe + 1, m
            step *= 2
    while lo < hi:
        mid = (lo + hi) // 2
        m = _max_matching(c <= vals[mid], warm)
        if min(m) >= 0:
            hi, best = mid, m
        else:
            lo, warm = mid + 1, m
    assign = np.asarray(best, dtype=np.int64)
    return assign, int(c[np.arange(rows), assign].max())


def lba_assign_matchings(ms: MatchingSet, cost: Callable[[np.ndarray, int], np.ndarray]) -> np.ndarray:
    """Permute matchings onto positions minimizing the worst agent cost.

    ``cost(payloads, k)`` gives the per-agent cost of placing the agents at
    position ``k``.  Returns ``perm`` with ``perm[k] = position of matching k``.
    """
    d = len(ms)
    C = np.empty((d, d), dtype=np.int64)
    for k in range(d):
        p = np.array(ms.payloads(k))
        for j in range(d):
            C[k, j] = cost(p, j).max()
    assign, _ = lba_bottleneck_matching(C)
    return assign


def lba_greedy_per_row(graph: BipartiteMultigraph, cost: Callable[[np.ndarray, int], np.ndarray]) -> MatchingSet:
    """Build matchings one position at a time by bottleneck assignment.

    For position ``k`` the color x row cost is the cheapest remaining agent
    with that color and start row; the chosen agents are removed before
    moving on.  Regularity guarantees every step has a perfect assignment.
    """
    d = graph.regular_degree()
    if not d:
        raise RegularityError("graph is not regular")
    n = graph.left_size
    E = np.array([(l, r, p) for l, r, p in graph.edges], dtype=np.int64).reshape(-1, 3)
    alive = np.ones(len(E), dtype=bool)
    out = []
    for k in range(d):
        idx = np.nonzero(alive)[0]
        ck = np.asarray(cost(E[idx, 2], k), dtype=np.int64)
        key = E[idx, 0] * n + E[idx, 1]
        order = np.lexsort((idx, ck, key))  # per (color,row): cheapest first
        key_s = key[order]
        first = np.ones(len(order), dtype=bool)
        first[1:] = key_s[1:] != key_s[:-1]
        pick = idx[order[first]]
        C = np.full((n, n), FORBIDDEN, dtype=np.int64)
        C[E[pick, 0], E[pick, 1]] = ck[order[first]]
        best_edge = np.full((n, n), -1, dtype=np.int64)
        best_edge[E[pick, 0], E[pick, 1]] = pick
        assign, _ = lba_bottleneck_matching(C)
        m = []
        for l in range(n):
            e = best_edge[l, assign[l]]
            assert e >= 0, "bottleneck assignment used a missing edge"
            alive[e] = False
            m.append((int(E[e, 1]), int(E[e, 2])))
        out.append(m)
    return MatchingSet(out)


# ---------------------------------------------------------------- LP export


def export_ip_model(colors, rows, first_cost: np.ndarray, third_cost: np.ndarray) -> str:
    """The matching IP in LP text format (minimize worst first + third phase cost).

    ``first_cost[i, k]`` and ``third_cost[i, k]`` are agent ``i``'s costs at
    position ``k``.  Variables ``x_k_i`` select position ``k`` for agent ``i``.
    """
    colors = np.asarray(colors)
    rows = np.asarray(rows)
    n, d = first_cost.shape
    lines = ["\\ matching assignment model", "Minimize", " obj: z1 + z3", "Subject To"]
    for i in range(n):
        terms = " + ".join(f"x_{k}_{i}" for k in range(d))
        lines.append(f" one_{i}: {terms} = 1")
    for k in range(d):
        for i in range(n):
            lines.append(f" f_{k}_{i}: z1 - {int(first_cost[i, k])} x_{k}_{i} >= 0")
            lines.append(f" t_{k}_{i}: z3 - {int(third_cost[i, k])} x_{k}_{i} >= 0")
        for c in np.unique(colors):
            members = np.nonzero(colors == c)[0]
            lines.append(f" col_{k}_{c}: " + " + ".join(f"x_{k}_{i}" for i in members) + " <= 1")
        for r in np.unique(rows):
            members = np.nonzero(rows == r)[0]
            lines.append(f" row_{k}_{r}: " + " + ".join(f"x_{k}_{i}" for i in members) + " = 1")
    lines.append("Binary")
    lines.extend(f" x_{k}_{i}" for k in range(d) for i in range(n))
    lines.append("End")
    return "\n".join(lines) + "\n"
