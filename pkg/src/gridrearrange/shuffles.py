"""Timed motion primitives that permute agents along grid lines.

Every primitive works in line-local coordinates ``(line, pos)``; callers
transpose for column work.  Trajectories are returned as integer arrays of
shape ``(T + 1, N, 2)`` indexed by agent, where the agents are numbered as
documented per primitive.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .swap_tables import get_swap_table


class ScheduleError(RuntimeError):
    """A sorting schedule overran its round budget."""


# ------------------------------------------------------------------ strips


def split_strips(n_lines: int, block: int) -> list[tuple[int, int]]:
    """Group ``n_lines`` adjacent lines into ``(first, height)`` strips.

    Block 2 prefers height 3 (4 for the remainder); block 4 uses height 2
    with a single height-3 strip when the count is odd.  A height-2 strip
    always sorts in blocks of four since no 2x2 swap exists.
    """
    if n_lines < 2:
        raise ValueError("need at least two lines to shuffle")
    if block == 4 or n_lines == 2:
        heights = [2] * (n_lines // 2)
        if n_lines % 2:
            heights[-1] = 3
    elif block == 2:
        if n_lines == 5:
            heights = [3, 2]
        else:
            q, r = divmod(n_lines, 3)
            heights = [3] * q
            for k in range(r):
                heights[-1 - k] += 1
    else:
        raise ValueError("block must be 2 or 4")
    out, start = [], 0
    for h in heights:
        out.append((start, h))
        start += h
    return out


def _strip_block(height: int, block: int) -> int:
    """Effective block width for a strip (3x3 blocks stand in for 3x4)."""
    if height == 2:
        return 4
    if height == 3 and block == 4:
        return 3
    if height in (3, 4):
        return 2
    raise ValueError(f"unsupported strip height {height}")


def block_partition(m: int, width: int, offset: int) -> list[tuple[int, int]]:
    """Blocks ``(start, size)`` of one round; undersized border blocks dropped."""
    cuts = list(range(offset, m, width))
    if offset:
        cuts = [0] + cuts
    out = []
    for a, b in zip(cuts, cuts[1:] + [m]):
        size = b - a
        if width == 2 and size == 2 or width == 3 and size >= 2 or width == 4 and size >= 3:
            out.append((a, size))
    return out


_OFFSETS = {2: (0, 1), 3: (0, 1, 2), 4: (0, 2)}


def round_budget(m: int, width: int) -> int:
    if width == 2:
        return m
    if width == 3:
        return max(m - 1, 1)
    return (m + 1) // 2 + 2


def sort_rounds(keys: np.ndarray, width: int) -> list[list[tuple[int, int]]]:
    """Simulate block odd-even sorting of each row of ``keys`` (in place copy).

    Returns the list of partitions actually used.  Stops as soon as every row
    is sorted; raises :class:`ScheduleError` past the round budget.
    """
    keys = np.array(keys)
    m = keys.shape[1]
    if width == 4 and m < 3:
        raise ValueError("two-row strips cannot permute lines shorter than 3")
    offsets = _OFFSETS[width]
    rounds = []
    budget = round_budget(m, width)
    while not _sorted(keys):
        if len(rounds) >= budget:
            raise ScheduleError(f"block-{width} sort of length {m} exceeded {budget} rounds")
        part = block_partition(m, width, offsets[len(rounds) % len(offsets)])
        for a, s in part:
            keys[:, a : a + s] = np.sort(keys[:, a : a + s], axis=1)
        rounds.append(part)
    return rounds


def _sorted(keys: np.ndarray) -> bool:
    return bool((keys[:, 1:] >= keys[:, :-1]).all())


# ------------------------------------------------------- full-density shuffle


@lru_cache(maxsize=None)
def _table_positions(shape: tuple[int, int], pattern: tuple) -> np.ndarray:
    return get_swap_table(shape).positions(pattern)


def parallel_row_shuffle_full(targets: np.ndarray, block: int = 2) -> np.ndarray:
    """Permute every line of a full grid simultaneously.

    ``targets[l, p]`` is the final position along line ``l`` of the agent
    starting at ``(l, p)``; agents are numbered ``l * m + p``.  Lines are
    grouped into strips (see :func:`split_strips`) that run independently.
    """
    targets = np.asarray(targets, dtype=np.int64)
    L, m = targets.shape
    if not (np.sort(targets, axis=1) == np.arange(m)).all():
        raise ValueError("each line's targets must be a permutation")
    N = L * m
    start = np.stack(np.divmod(np.arange(N), m), axis=1)
    if (targets == np.arange(m)).all():
        return start[None]
    strip_plans = []
    for r0, h in split_strips(L, block):
        strip_plans.append((r0, _strip_shuffle(targets[r0 : r0 + h], _strip_block(h, block))))
    T = max(p.shape[0] for _, p in strip_plans) - 1
    out = np.empty((T + 1, N, 2), dtype=np.int64)
    for r0, p in strip_plans:
        h = p.shape[1] // m
        ids = np.arange(r0 * m, (r0 + h) * m)
        out[: p.shape[0], ids] = p + [r0, 0]
        out[p.shape[0] :, ids] = p[-1] + [r0, 0]
    return out


def _strip_shuffle(targets: np.ndarray, width: int) -> np.ndarray:
    """Trajectory ``(T + 1, h*m, 2)`` for one strip in strip coordinates."""
    h, m = targets.shape
    occupant = np.arange(h * m).reshape(h, m)
    flat_t = targets.ravel()
    frames = [np.stack(np.divmod(np.arange(h * m), m), axis=1)]
    for part in sort_rounds(targets, width):
        keys = flat_t[occupant]
        cur = frames[-1]
        pieces = []
        length = 0
        for a, s in part:
            sub = keys[:, a : a + s]
            pattern = tuple(tuple(int(x) for x in row) for row in np.argsort(np.argsort(sub, axis=1), axis=1))
            pos = _table_positions((h, s), pattern)
            length = max(length, pos.shape[0] - 1)
            pieces.append((a, s, occupant[:, a : a + s].ravel(), pos))
        if length == 0:
            continue
        chunk = np.repeat(cur[None], length, axis=0)
        new_occ = occupant.copy()
        for a, s, ids, pos in pieces:
            rr, cc = np.divmod(pos[1:], s)
            k = pos.shape[0] - 1
            if k:
                chunk[:k, ids, 0] = rr
                chunk[:k, ids, 1] = cc + a
                chunk[k:, ids, 0] = rr[-1]
                chunk[k:, ids, 1] = cc[-1] + a
            new_occ[rr[-1] if k else np.divmod(np.arange(h * s), s)[0], (cc[-1] if k else np.arange(h * s) % s) + a] = ids
        occupant = new_occ
        frames.extend(chunk)
    return np.stack(frames)


# ------------------------------------------------------------ highway lanes


def highway_shuffle(start: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Permute agents resting on the middle row of a 3-row band.

    ``start`` and ``target`` are distinct column lists.  Movers step onto the
    bottom lane (heading right) or the top lane (heading left), advance one
    column per step without stopping, and step back onto the middle row at
    their target column.  Returns ``(T + 1, n, 2)`` in band coordinates.
    """
    start = np.asarray(start, dtype=np.int64)
    target = np.asarray(target, dtype=np.int64)
    n = len(start)
    if len(set(start.tolist())) != n or len(set(target.tolist())) != n:
        raise ValueError("start and target columns must be distinct")
    delta = target - start
    dist = np.abs(delta)
    T = int(dist.max()) + 2 if n and dist.any() else 0
    t = np.arange(T + 1)[:, None]
    lane = np.where(delta > 0, 2, 0)[None, :]
    moving = (t >= 1) & (t <= dist + 1) & (dist > 0)
    col = np.where(t >= dist + 2, target, start + np.sign(delta) * np.clip(t - 1, 0, dist))
    col = np.where(t == 0, start, col)
    row = np.where(moving, lane, 1)
    return np.stack([row, col], axis=-1)


def assign_cell_slots(start: np.ndarray, target_cell: np.ndarray, slots_of_cell) -> np.ndarray:
    """Pick a distinct target column for every agent of one band.

    Agents staying in their cell keep their column; arrivals from the left
    take the leftmost free slots and arrivals from the right the rightmost.
    ``slots_of_cell(c)`` lists the sorted slot columns of cell ``c``.
    """
    start = np.asarray(start, dtype=np.int64)
    target_cell = np.asarray(target_cell, dtype=np.int64)
    out = np.empty_like(start)
    for c in np.unique(target_cell):
        slots = list(slots_of_cell(int(c)))
        members = np.nonzero(target_cell == c)[0]
        if len(members) > len(slots):
            raise ValueError(f"cell {int(c)} receives {len(members)} agents but holds {len(slots)}")
        inside = [i for i in members if start[i] in slots]
        free = [x for x in slots if x not in set(start[inside].tolist())]
        for i in inside:
            out[i] = start[i]
        from_left = sorted((i for i in members if start[i] < slots[0]), key=lambda i: -start[i])
        from_right = sorted((i for i in members if start[i] > slots[-1]), key=lambda i: start[i])
        for i in from_left:
            out[i] = free.pop(0)
        for i in from_right:
            out[i] = free.pop()
    return out


# ------------------------------------------------------------ linear merge


def merge_levels(m: int) -> list[list[tuple[int, int, int]]]:
    """Merge tasks ``(lo, mid, hi)`` grouped by height, deepest first."""
    levels: dict[int, list] = {}

    def rec(lo: int, hi: int) -> int:
        if hi - lo <= 1:
            return 0
        mid = lo + (hi - lo) // 2
        h = max(rec(lo, mid), rec(mid, hi)) + 1
        levels.setdefault(h, []).append((lo, mid, hi))
        return h

    rec(0, m)
    return [sorted(levels[h]) for h in sorted(levels)]


def linear_merge_bound(m: int) -> int:
    return m + 2 * (int(np.ceil(np.log2(m))) + 1) if m > 1 else 0


def linear_merge(target: np.ndarray) -> np.ndarray:
    """Sort a full line resting on row 0 of a 2-row band.

    ``target[p]`` is the final column of the agent at column ``p``.  Returns
    ``(T + 1, m, 2)`` in band coordinates (row 1 is the travel lane).
    """
    traj, _ = linear_merge_batch(np.asarray(target)[None])
    return traj[0]


def linear_merge_batch(targets: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Batched :func:`linear_merge` over ``(B, m)`` target rows.

    Merge levels run one after another; inside a merge, right-half movers
    slide left along row 0 and left-half movers drop to row 1, slide right
    and rise once their column is clear.  Returns ``(traj, makespans)``
    where ``traj`` is ``(B, T + 1, m, 2)`` padded to the batch maximum per
    level and ``makespans[b]`` is the unpadded plan length.
    """
    targets = np.asarray(targets, dtype=np.int64)
    B, m = targets.shape
    if not (np.sort(targets, axis=1) == np.arange(m)).all():
        raise ValueError("targets must be permutations")
    bi = np.arange(B)[:, None]
    agents = np.arange(m)
    occ = np.broadcast_to(agents, (B, m)).copy()  # occ[b, col] = agent
    frames = [np.stack([np.zeros((B, m), np.int64), occ.copy()], axis=-1)]
    total = np.zeros(B, dtype=np.int64)
    for level in merge_levels(m):
        src = np.empty((B, m), dtype=np.int64)
        src[bi, occ] = agents
        final = src.copy()
        t_up = np.zeros((B, m), dtype=np.int64)
        kind = np.zeros((B, m), dtype=np.int8)  # 1 left-half mover, 2 right-half mover
        dur = np.zeros(B, dtype=np.int64)
        for lo, mid, hi in level:
            seg = occ[:, lo:hi]
            order = np.argsort(targets[bi, seg], axis=1, kind="stable")
            f = np.empty_like(order)
            np.put_along_axis(f, order, np.arange(lo, hi)[None, :], axis=1)
            final[bi, seg] = f
            h = mid - lo
            pl = np.arange(lo, mid)[None, :]
            pr = np.arange(mid, hi)[None, :]
            fl, fr = f[:, :h], f[:, h:]
            left_mv = fl > pl
            right_mv = fr < pr
            kind[bi, seg[:, :h]] = np.where(left_mv, 1, 0)
            kind[bi, seg[:, h:]] = np.where(right_mv, 2, 0)
            # a right mover from p to q occupies column c at time p - c
            passing = (fr[:, None, :] < fl[:, :, None]) & (fl[:, :, None] <= pr[:, None, :])
            clear = np.where(passing, pr[:, None, :] - fl[:, :, None] + 1, 0).max(axis=2)
            tu = np.where(left_mv, np.maximum(fl - pl + 2, clear), 0)
            t_up[bi, seg[:, :h]] = tu
            slide = np.where(right_mv, pr - fr, 0)
            dur = np.maximum(dur, np.maximum(tu.max(axis=1), slide.max(axis=1)))
        D = int(dur.max())
        if D:
            t = np.arange(1, D + 1)[None, :, None]
            s, f, kd, tu = (a[:, None, :] for a in (src, final, kind, t_up))
            lane = (kd == 1) & (t < tu)
            col = np.where(kd == 2, np.maximum(s - t, f), s)
            col = np.where(kd == 1, np.where(lane, np.minimum(s + t - 1, f), f), col)
            frames.extend(np.stack([lane.astype(np.int64), col], axis=-1).transpose(1, 0, 2, 3))
        total += dur
        occ[bi, final] = agents
    traj = np.stack(frames, axis=1)
    return traj, total


# ------------------------------------------------------------ composition


def compose_parallel_bands(pieces, n: int, start: np.ndarray) -> np.ndarray:
    """Run vertex-disjoint sub-plans side by side.

    ``pieces`` holds ``(agent_ids, traj)`` with ``traj`` of shape
    ``(T_k + 1, len(agent_ids), dim)`` in global coordinates.  Agents not in
    any piece rest at ``start``.  The result is padded to the longest piece.
    """
    start = np.asarray(start, dtype=np.int64)
    T = max((tr.shape[0] - 1 for _, tr in pieces), default=0)
    out = np.repeat(start[None], T + 1, axis=0)
    owner: dict = {}
    seen = np.zeros(n, dtype=bool)
    for k, (ids, tr) in enumerate(pieces):
        ids = np.asarray(ids, dtype=np.int64)
        if seen[ids].any():
            raise ValueError("an agent appears in two bands")
        seen[ids] = True
        for v in {tuple(x) for x in tr.reshape(-1, tr.shape[-1]).tolist()}:
            if owner.setdefault(v, k) != k:
                raise ValueError(f"bands overlap at {v}")
        out[: tr.shape[0], ids] = tr
        out[tr.shape[0] :, ids] = tr[-1]
    return out
