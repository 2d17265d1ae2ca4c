"""Compare the compiled and pure-Python kernels.

    python benchmarks/bench_kernels.py [--repeat 3]

Both backends are imported directly, so the choice made at package import
(``gridrearrange._kernels.BACKEND``) does not matter here.  Each row reports
the best wall time over ``--repeat`` runs and checks that the outputs agree.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from gridrearrange import _pykernels
from gridrearrange.oracle import rotation_moves
from gridrearrange.swap_tables import block_adjacency

try:
    from gridrearrange import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def best_of(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def conflict_ids(steps, n, seed):
    """Random walks on a 64x64 grid: dense enough to contain some collisions."""
    rng = np.random.default_rng(seed)
    side = 64
    pos = rng.choice(side * side, n, replace=False)
    rows = [pos]
    for _ in range(steps):
        step = rng.choice([-side, side, -1, 1, 0], n)
        pos = np.clip(pos + step, 0, side * side - 1)
        rows.append(pos)
    return np.stack(rows)


def cases():
    for shape in ((2, 3), (2, 4), (3, 3)):
        moves = np.array(rotation_moves(block_adjacency(*shape)), dtype=np.int64)
        yield f"perm_bfs {shape[0]}x{shape[1]}", "perm_bfs", (moves,)
    for steps, n in ((200, 500), (400, 1500)):
        yield f"plan_conflicts T={steps} n={n}", "plan_conflicts", (conflict_ids(steps, n, 0),)


def same(a, b):
    if isinstance(a, tuple):
        return all(np.array_equal(x, y) for x, y in zip(a, b))
    return sorted(a) == sorted(b)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if _ckernels is None:
        print("compiled kernels unavailable; build with: pip install -e . --no-build-isolation")
    print(f"{'case':<30}{'python s':>10}{'cython s':>10}{'speedup':>9}  agree")
    for label, name, inputs in cases():
        tp, out_p = best_of(lambda: getattr(_pykernels, name)(*inputs), args.repeat)
        if _ckernels is None:
            print(f"{label:<30}{tp:>10.4f}{'-':>10}{'-':>9}  -")
            continue
        tc, out_c = best_of(lambda: getattr(_ckernels, name)(*inputs), args.repeat)
        print(f"{label:<30}{tp:>10.4f}{tc:>10.4f}{tp / tc:>8.1f}x  {same(out_p, out_c)}")


if __name__ == "__main__":
    main()
