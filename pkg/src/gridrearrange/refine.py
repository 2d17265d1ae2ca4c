"""Post-hoc desynchronization that keeps every vertex's visit order.

Each agent follows its own path with idle steps stripped.  An agent may step
onto its next vertex as soon as it is that vertex's next entrant and the
vertex is free or being vacated in the same step.  Rotations along cycles of
three or more agents advance together.  Since every entry happens no later
than in the input, makespan and sum of costs never grow.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import GridSpec, Instance, Plan, validate_plan


class RefineError(RuntimeError):
    pass


@dataclass(frozen=True)
class VisitOrder:
    """Per-vertex queue of entering agents, initial occupants first."""

    queues: dict

    @classmethod
    def of(cls, plan: Plan) -> "VisitOrder":
        ids, _ = _encode(plan.paths)
        n, T1 = ids.shape
        q: dict = {}
        for i in range(n):
            q.setdefault(int(ids[i, 0]), []).append((0, i))
        moved = ids[:, 1:] != ids[:, :-1]
        ti, ai = np.nonzero(moved.T)
        for t, i in zip(ti.tolist(), ai.tolist()):
            q.setdefault(int(ids[i, t + 1]), []).append((t + 1, i))
        return cls({v: tuple(a for _, a in sorted(lst)) for v, lst in q.items()})


def _encode(paths: np.ndarray):
    span = paths.reshape(-1, paths.shape[-1]).max(axis=0) + 1 if paths.size else np.ones(paths.shape[-1], int)
    flat = np.ravel_multi_index(tuple(np.moveaxis(paths, -1, 0)), tuple(span)) if paths.size else np.zeros(paths.shape[:2], int)
    return flat, tuple(int(x) for x in span)


def _check(plan: Plan) -> None:
    P = plan.paths
    if P.shape[0] == 0:
        return
    if P.min() < 0:
        raise RefineError("negative coordinates")
    span = P.reshape(-1, P.shape[-1]).max(axis=0) + 1
    grid = GridSpec(*[int(x) for x in span]) if len(span) == 3 else GridSpec(int(span[0]), int(span[1]))
    inst = Instance(grid, [tuple(v) for v in P[:, 0].tolist()], [tuple(v) for v in P[:, -1].tolist()])
    report = validate_plan(grid, inst, plan)
    if not report.valid:
        raise RefineError(f"input plan is invalid: {report.violations[0]}")


def refine(plan: Plan, check: bool = True) -> Plan:
    """Execute ``plan`` as early as the per-vertex visit orders allow."""
    if check:
        _check(plan)
    P = plan.paths
    n = P.shape[0]
    if n == 0 or plan.makespan == 0:
        return plan
    ids, span = _encode(P)
    order = VisitOrder.of(plan).queues
    # compressed paths
    paths = []
    for i in range(n):
        row = ids[i]
        keep = np.ones(len(row), dtype=bool)
        keep[1:] = row[1:] != row[:-1]
        paths.append(row[keep].tolist())
    ptr = [0] * n
    qpos = {v: 0 for v in order}  # entries already performed
    occ = {}
    for i in range(n):
        occ[paths[i][0]] = i
        qpos[paths[i][0]] += 1
    active = [i for i in range(n) if len(paths[i]) > 1]
    frames = [[p[0] for p in paths]]
    cur = list(frames[0])
    limit = plan.makespan
    while active:
        if len(frames) > limit + 1:
            raise RefineError("refined schedule exceeded the input makespan")
        decision: dict = {}
        for i in active:
            if i in decision:
                continue
            chain = []
            on_chain: dict = {}
            a = i
            result = None
            while True:
                if a in decision:
                    result = decision[a]
                    break
                if a in on_chain:  # cycle
                    k = on_chain[a]
                    cyc = chain[k:]
                    ok = len(cyc) >= 3
                    for b in cyc:
                        decision[b] = ok
                    chain = chain[:k]
                    result = False  # the cycle refills every vertex it vacates
                    break
                if ptr[a] + 1 >= len(paths[a]):
                    result = False
                    decision[a] = False
                    break
                v = paths[a][ptr[a] + 1]
                q = order[v]
                if qpos[v] >= len(q) or q[qpos[v]] != a:
                    result = False
                    decision[a] = False
                    break
                j = occ.get(v, -1)
                if j < 0:
                    result = True
                    decision[a] = True
                    break
                on_chain[a] = len(chain)
                chain.append(a)
                a = j
            for b in reversed(chain):
                decision[b] = result
        movers = [i for i in active if decision.get(i)]
        if not movers:
            raise RefineError("no agent can advance; visit orders deadlock")
        for i in movers:
            u = paths[i][ptr[i]]
            if occ.get(u) == i:
                del occ[u]
        for i in movers:
            ptr[i] += 1
            v = paths[i][ptr[i]]
            occ[v] = i
            qpos[v] += 1
            cur[i] = v
        frames.append(list(cur))
        active = [i for i in active if ptr[i] + 1 < len(paths[i])]
    flat = np.array(frames, dtype=np.int64).T
    coords = np.stack(np.unravel_index(flat, span), axis=-1)
    return Plan(coords)
