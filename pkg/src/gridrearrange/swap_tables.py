"""Makespan-optimal plans for every per-row permutation of a full sub-grid.

A table for an ``h x w`` block maps each pattern (one permutation of the
``w`` columns per row) to the shortest sequence of synchronous rotation moves
that realizes it.  Tables are built once by a breadth-first search over all
``(h*w)!`` arrangements and cached on disk.
"""
from __future__ import annotations

import itertools
import os
import struct
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import _kernels
from ._pykernels import rank as _rank
from .oracle import rotation_moves

SUPPORTED_SHAPES = ((3, 2), (4, 2), (2, 3), (3, 3), (2, 4))
CACHE_VERSION = 1
_MAGIC = b"GRST"

Pattern = tuple  # tuple of per-row tuples; pattern[r][c] = target column of agent at (r, c)


def block_adjacency(h: int, w: int) -> list[list[int]]:
    adj = []
    for r in range(h):
        for c in range(w):
            nb = []
            for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1)):
                rr, cc = r + dr, c + dc
                if 0 <= rr < h and 0 <= cc < w:
                    nb.append(rr * w + cc)
            adj.append(nb)
    return adj


@dataclass(frozen=True)
class SwapTable:
    shape: tuple[int, int]
    moves: np.ndarray  # (M, h*w) cell maps
    plans: dict = field(repr=False)  # pattern -> tuple of move indices

    @property
    def max_steps(self) -> int:
        return max(len(p) for p in self.plans.values())

    def steps(self, pattern: Pattern) -> int:
        return len(self.plans[_norm(pattern)])

    def positions(self, pattern: Pattern) -> np.ndarray:
        """Cell index of every agent over time, shape ``(T + 1, h*w)``.

        Agent ``k`` starts in cell ``k`` (row-major).
        """
        return _positions(self, _norm(pattern))


def _norm(pattern) -> Pattern:
    return tuple(tuple(int(c) for c in row) for row in pattern)


def _positions(table: SwapTable, pattern: Pattern) -> np.ndarray:
    seq = table.plans[pattern]
    n = table.moves.shape[1]
    pos = np.empty((len(seq) + 1, n), dtype=np.int64)
    pos[0] = np.arange(n)
    for t, m in enumerate(seq):
        pos[t + 1] = table.moves[m][pos[t]]
    return pos


def all_patterns(h: int, w: int):
    perms = list(itertools.permutations(range(w)))
    return itertools.product(perms, repeat=h)


def generate_swap_table(shape: tuple[int, int]) -> SwapTable:
    """Build the table by BFS from the identity arrangement."""
    h, w = shape
    if (h, w) not in SUPPORTED_SHAPES:
        raise ValueError(f"unsupported swap-table shape {h}x{w}")
    moves = np.array(rotation_moves(block_adjacency(h, w)), dtype=np.int64)
    dist, parent = _kernels.perm_bfs(moves)
    n = h * w
    plans = {}
    for pattern in all_patterns(h, w):
        # content of every cell once the pattern is realized
        state = np.empty(n, dtype=np.int64)
        for r, row in enumerate(pattern):
            for c, tc in enumerate(row):
                state[r * w + tc] = r * w + c
        seq = []
        rk = _rank(state)
        while dist[rk] > 0:
            m = int(parent[rk])
            seq.append(m)
            # undo child[mv[c]] = state[c]
            state = state[moves[m]]
            rk = _rank(state)
        seq.reverse()
        plans[pattern] = tuple(seq)
    return SwapTable((h, w), moves, plans)


# ---------------------------------------------------------------- disk cache


def cache_dir() -> Path:
    env = os.environ.get("GRIDREARRANGE_CACHE")
    return Path(env) if env else Path.home() / ".cache" / "gridrearrange"


def _cache_path(shape) -> Path:
    return cache_dir() / f"swap_{shape[0]}x{shape[1]}.bin"


def dump_table(table: SwapTable) -> bytes:
    h, w = table.shape
    out = [_MAGIC, struct.pack("<HBBHI", CACHE_VERSION, h, w, len(table.moves), len(table.plans))]
    out.append(table.moves.astype(np.uint8).tobytes())
    for pattern, seq in sorted(table.plans.items()):
        out.append(bytes(c for row in pattern for c in row))
        out.append(struct.pack("<H", len(seq)))
        out.append(bytes(seq))
    return b"".join(out)


def load_table(blob: bytes) -> SwapTable:
    if blob[:4] != _MAGIC:
        raise ValueError("not a swap-table file")
    version, h, w, n_moves, n_plans = struct.unpack_from("<HBBHI", blob, 4)
    if version != CACHE_VERSION:
        raise ValueError(f"swap-table version {version} != {CACHE_VERSION}")
    n = h * w
    off = 4 + struct.calcsize("<HBBHI")
    moves = np.frombuffer(blob, dtype=np.uint8, count=n_moves * n, offset=off).reshape(n_moves, n).astype(np.int64)
    off += n_moves * n
    plans = {}
    for _ in range(n_plans):
        flat = blob[off : off + n]
        off += n
        (length,) = struct.unpack_from("<H", blob, off)
        off += 2
        plans[tuple(tuple(flat[r * w : (r + 1) * w]) for r in range(h))] = tuple(blob[off : off + length])
        off += length
    return SwapTable((h, w), moves, plans)


@lru_cache(maxsize=None)
def get_swap_table(shape: tuple[int, int]) -> SwapTable:
    """Cached table: memory, then disk, then regenerate (and write back)."""
    shape = tuple(shape)
    path = _cache_path(shape)
    try:
        return load_table(path.read_bytes())
    except (OSError, ValueError, struct.error):
        pass
    table = generate_swap_table(shape)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".tmp")
        tmp.write_bytes(dump_table(table))
        tmp.replace(path)
    except OSError:
        pass
    return table
