"""Pure-Python (numpy) implementations of the hot kernels.

These are the reference versions; ``_ckernels.pyx`` mirrors them exactly and
the two are cross-checked in the test-suite.
"""
from __future__ import annotations

from math import factorial

import numpy as np


def _rank_rows(states: np.ndarray) -> np.ndarray:
    """Lehmer-code rank of every row of an (N, n) array of permutations."""
    n = states.shape[1]
    ranks = np.zeros(states.shape[0], dtype=np.int64)
    for i in range(n - 1):
        smaller = (states[:, i + 1 :] < states[:, i : i + 1]).sum(axis=1)
        ranks += smaller * factorial(n - 1 - i)
    return ranks


def unrank(rank: int, n: int) -> np.ndarray:
    items = list(range(n))
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        f = factorial(n - 1 - i)
        k, rank = divmod(rank, f)
        out[i] = items.pop(k)
    return out


def rank(state) -> int:
    return int(_rank_rows(np.asarray(state, dtype=np.int64)[None, :])[0])


def perm_bfs(moves: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Breadth-first search over all permutations of ``n`` items.

    ``moves[m, c]`` is the cell that the content of cell ``c`` moves to under
    move ``m``.  The root is the identity state.  Returns ``(dist, parent)``
    indexed by permutation rank; ``parent`` holds the index of the move that
    first reached the state (-1 for the root).
    """
    moves = np.asarray(moves, dtype=np.int64)
    n_moves, n = moves.shape
    total = factorial(n)
    dist = np.full(total, -1, dtype=np.int8)
    parent = np.full(total, -1, dtype=np.int8)
    # child[:, dst] = state[:, src]  <=>  child = state[:, inverse]
    inverse = np.empty_like(moves)
    rows = np.arange(n_moves)[:, None]
    inverse[rows, moves] = np.arange(n)[None, :]

    frontier = np.arange(n, dtype=np.int8)[None, :]
    dist[_rank_rows(frontier)] = 0
    depth = 0
    while frontier.shape[0]:
        depth += 1
        children = frontier[:, inverse]  # (F, M, n)
        flat = children.reshape(-1, n)
        ranks = _rank_rows(flat)
        fresh = dist[ranks] < 0
        idx = np.nonzero(fresh)[0]
        if idx.size == 0:
            break
        uniq, first = np.unique(ranks[idx], return_index=True)
        order = np.sort(idx[first])
        dist[ranks[order]] = depth
        parent[ranks[order]] = order % n_moves
        frontier = flat[order]
    return dist, parent


def plan_conflicts(ids: np.ndarray) -> list[tuple[str, int, int, int]]:
    """Vertex and swap collisions in a dense (T+1, n) array of vertex ids.

    Returns ``(kind, t, i, j)`` tuples with ``i < j``; kind is ``"vertex"``
    (same vertex at time ``t``) or ``"swap"`` (exchange between ``t`` and
    ``t + 1``).
    """
    ids = np.asarray(ids, dtype=np.int64)
    steps, n = ids.shape
    out: list[tuple[str, int, int, int]] = []
    if n < 2:
        return out
    order = np.argsort(ids, axis=1, kind="stable")
    srt = np.take_along_axis(ids, order, axis=1)
    dup_t, dup_k = np.nonzero(srt[:, 1:] == srt[:, :-1])
    seen = set()
    for t, k in zip(dup_t.tolist(), dup_k.tolist()):
        v = srt[t, k]
        # collect the whole run of equal ids once
        if (t, v) in seen:
            continue
        seen.add((t, v))
        agents = sorted(order[t, ids[t, order[t]] == v].tolist())
        for a in range(len(agents)):
            for b in range(a + 1, len(agents)):
                out.append(("vertex", t, agents[a], agents[b]))
    if steps >= 2:
        u = ids[:-1]
        v = ids[1:]
        tt, ii = np.nonzero(u != v)
        if tt.size:
            uu = u[tt, ii]
            vv = v[tt, ii]
            span = int(ids.max()) + 1
            fwd = (tt * span + uu) * span + vv
            rev = (tt * span + vv) * span + uu
            order = np.argsort(fwd, kind="stable")
            fs = fwd[order]
            lo = np.searchsorted(fs, rev, "left")
            hi = np.searchsorted(fs, rev, "right")
            for k in np.nonzero(hi > lo)[0].tolist():
                a = int(ii[k])
                for b in ii[order[lo[k] : hi[k]]].tolist():
                    if a < b:
                        out.append(("swap", int(tt[k]), a, b))
    out.sort(key=lambda r: (r[1], r[0], r[2], r[3]))
    return out
