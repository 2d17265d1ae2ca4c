"""Acceptance criteria 1-12.

Each test prints one ``criterion N: PASS|FAIL`` line; the same lines are
repeated in the terminal summary.  Instance sets are cached so criteria that
reuse another criterion's plans (7 reuses 3-6) do not solve twice.
"""
import time
from contextlib import contextmanager
from functools import lru_cache

import numpy as np
import pytest

from gridrearrange import _kernels
from gridrearrange._pykernels import rank
from gridrearrange.bench import Cell, run_cell
from gridrearrange.grid import GridSpec, Instance, compute_metrics, validate_plan
from gridrearrange.instances import generate_instance
from gridrearrange.oracle import optimal_makespan_labeled, optimal_makespan_unlabeled, rotation_moves
from gridrearrange.refine import VisitOrder, refine
from gridrearrange.shuffles import linear_merge_batch, linear_merge_bound
from gridrearrange.solvers import PreconditionError, SolverConfig, solve
from gridrearrange.solvers.grm import grm_bound
from gridrearrange.solvers.grid3d import shuffle3d_bound
from gridrearrange.solvers.sparse import grh_shuffle_bound
from gridrearrange.swap_tables import SUPPORTED_SHAPES, block_adjacency, generate_swap_table
from gridrearrange.unlabeled import unlabeled_route

from conftest import ACCEPTANCE
from helpers import batch_valid

SEEDS = range(20)
pytestmark = pytest.mark.slow


@contextmanager
def criterion(n: int, title: str):
    info = {"detail": ""}
    try:
        yield info
    except BaseException as e:
        line = f"criterion {n:2d}: FAIL  {title}  ({type(e).__name__}: {str(e).splitlines()[0] if str(e) else ''})"
        ACCEPTANCE[n] = line
        print(line)
        raise
    line = f"criterion {n:2d}: PASS  {title}  {info['detail']}"
    ACCEPTANCE[n] = line
    print(line)


def _valid(inst, plan):
    return validate_plan(inst.grid, inst, plan).valid


def _timed_solve(inst, **cfg):
    t0 = time.perf_counter()
    plan, trace = solve(inst, SolverConfig(dimension=inst.grid.dim, **cfg))
    return plan, trace, time.perf_counter() - t0


# ------------------------------------------------------------ cached runs


@lru_cache(maxsize=None)
def grm_runs():
    out = []
    for dims in ((12, 9), (18, 12), (30, 30)):
        for algo in ("grm2", "grm4"):
            for s in SEEDS:
                inst = generate_instance(dims, 1.0, "random", s)
                plan, _, dt = _timed_solve(inst, algorithm=algo)
                out.append((dims, algo, inst, plan, dt))
    return out


@lru_cache(maxsize=None)
def grh_runs(dims, matching="lba"):
    out = []
    for s in SEEDS:
        inst = generate_instance(dims, 1 / 3, "random", s)
        plan, trace, dt = _timed_solve(inst, algorithm="grh", matching_mode=matching)
        out.append((inst, plan, trace, dt))
    return out


@lru_cache(maxsize=None)
def refined(dims, matching="lba"):
    return [refine(plan) for _, plan, _, _ in grh_runs(dims, matching)]


@lru_cache(maxsize=None)
def sortation_runs():
    out = []
    for s in SEEDS:
        inst = generate_instance((45, 30), 2 / 9, "sortation", s)
        plan, trace, _ = _timed_solve(inst, algorithm="grh")
        out.append((inst, plan, trace))
    return out


def _makespans(insts, plans):
    return np.array([compute_metrics(i, p).makespan for i, p in zip(insts, plans)], dtype=float)


# ---------------------------------------------------------------- criteria


def test_c01_swap_table_maxima():
    expected = {(3, 2): 7, (4, 2): 6, (2, 3): 6, (3, 3): 7, (2, 4): 6}
    with criterion(1, "swap-table worst cases") as info:
        got = {shape: generate_swap_table(shape).max_steps for shape in expected}
        assert got == expected, got
        assert set(expected) == set(SUPPORTED_SHAPES)
        info["detail"] = " ".join(f"{h}x{w}={v}" for (h, w), v in got.items())


def test_c02_single_swap_witness():
    with criterion(2, "2x3 adjacent swap") as info:
        g = GridSpec(2, 3)
        cells = g.free_vertices()
        goals = list(cells)
        goals[0], goals[1] = cells[1], cells[0]
        opt, plan = optimal_makespan_labeled(g, Instance(g, cells, goals))
        table = generate_swap_table((2, 3)).steps(((1, 0, 2), (0, 1, 2)))
        assert opt == 3 and table == 3, (opt, table)
        assert _valid(Instance(g, cells, goals), plan)
        info["detail"] = f"oracle={opt} table={table}"


def test_c03_grm_bounds():
    with criterion(3, "GRM bounds, 20 seeds x {12x9,18x12,30x30} x {block2,block4}") as info:
        worst = {}
        slowest = 0.0
        for dims, algo, inst, plan, dt in grm_runs():
            block = 2 if algo == "grm2" else 4
            ms = compute_metrics(inst, plan).makespan
            bound = grm_bound(*dims, block)
            assert ms <= bound, (dims, algo, ms, bound)
            assert _valid(inst, plan), (dims, algo)
            worst[(dims, algo)] = max(worst.get((dims, algo), 0), ms)
            if dims == (30, 30):
                slowest = max(slowest, dt)
        assert slowest < 10, slowest
        info["detail"] = f"max 30x30 makespan block2={worst[((30, 30), 'grm2')]}/{grm_bound(30, 30, 2)} block4={worst[((30, 30), 'grm4')]}/{grm_bound(30, 30, 4)} slowest={slowest:.2f}s"


def test_c04_grh_shuffle_bound():
    with criterion(4, "GRH shuffle-phase bound, 20 seeds x {18x18,36x24,90x60}") as info:
        parts = []
        for dims in ((18, 18), (36, 24), (90, 60)):
            spans = []
            for inst, plan, trace, dt in grh_runs(dims):
                spans.append(trace.shuffle_span)
                assert trace.shuffle_span <= grh_shuffle_bound(*dims), (dims, trace.shuffle_span)
                assert _valid(inst, plan), dims
                if dims == (90, 60):
                    assert dt < 30, dt
            parts.append(f"{dims[0]}x{dims[1]} max={max(spans)}/{grh_shuffle_bound(*dims)}")
        slowest = max(dt for *_, dt in grh_runs((90, 60)))
        info["detail"] = " ".join(parts) + f" slowest90x60={slowest:.2f}s"


def test_c05_grh_ratio():
    with criterion(5, "GRH 90x60 mean ratio with LBA+refine <= 2.0") as info:
        runs = grh_runs((90, 60))
        ratios = []
        for (inst, _, _, _), plan in zip(runs, refined((90, 60))):
            assert _valid(inst, plan)
            ratios.append(compute_metrics(inst, plan).optimality_ratio)
        mean = float(np.mean(ratios))
        assert mean <= 2.0, mean
        info["detail"] = f"mean ratio={mean:.3f}"


def test_c06_sortation():
    with criterion(6, "sortation 45x30 at 2/9, no obstacle occupancy") as info:
        bound = grh_shuffle_bound(45, 30)
        spans = []
        for inst, plan, trace in sortation_runs():
            assert _valid(inst, plan)
            occupied = {tuple(v) for v in plan.paths.reshape(-1, 2).tolist()}
            assert not occupied & set(inst.grid.obstacles)
            assert trace.shuffle_span <= bound, trace.shuffle_span
            spans.append(trace.shuffle_span)
        info["detail"] = f"max shuffle span={max(spans)}/{bound}"


def _refine_props(inst, plan):
    r = refine(plan)
    before, after = compute_metrics(inst, plan), compute_metrics(inst, r)
    assert after.makespan <= before.makespan and after.soc <= before.soc
    assert refine(r) == r
    assert VisitOrder.of(r) == VisitOrder.of(plan)
    assert _valid(inst, r)
    return r


def test_c07_refine():
    with criterion(7, "refine properties on plans of 3-6, GRH 60x60 reduction >= 5%") as info:
        plans = [(inst, plan) for _, _, inst, plan, _ in grm_runs()]
        for dims in ((18, 18), (36, 24), (90, 60)):
            plans += [(inst, plan) for inst, plan, _, _ in grh_runs(dims)]
        plans += [(inst, r) for (inst, _, _, _), r in zip(grh_runs((90, 60)), refined((90, 60)))]
        plans += [(inst, plan) for inst, plan, _ in sortation_runs()]
        for inst, plan in plans:
            _refine_props(inst, plan)
        runs = grh_runs((60, 60))
        insts = [r[0] for r in runs]
        base = _makespans(insts, [r[1] for r in runs])
        after = _makespans(insts, refined((60, 60)))
        reduction = 1 - after.mean() / base.mean()
        assert reduction >= 0.05, reduction
        info["detail"] = f"{len(plans)} plans checked, 60x60 mean makespan {base.mean():.1f} -> {after.mean():.1f} ({reduction:.1%})"


def test_c08_heuristic_direction():
    with criterion(8, "LBA <= Hall and refined <= unrefined (means)") as info:
        parts = []
        for dims in ((18, 18), (36, 24)):
            means = {}
            for mode in ("hall", "lba"):
                runs = grh_runs(dims, mode)
                insts = [r[0] for r in runs]
                means[mode] = _makespans(insts, [r[1] for r in runs]).mean()
                means[mode + "+refine"] = _makespans(insts, refined(dims, mode)).mean()
            assert means["lba"] <= means["hall"], means
            assert means["hall+refine"] <= means["hall"] and means["lba+refine"] <= means["lba"], means
            parts.append(f"{dims[0]}x{dims[1]} " + " ".join(f"{k}={v:.1f}" for k, v in means.items()))
        info["detail"] = "; ".join(parts)


def _full_density_distances(shape):
    # dist[rank(state)] is the optimum from the identity to ``state``; plans
    # reverse, so it is also the optimum back to the identity
    moves = np.array(rotation_moves(block_adjacency(*shape)), dtype=np.int64)
    dist, _ = _kernels.perm_bfs(moves)
    return dist


def test_c09_oracle_dominance():
    shapes = [(h, w) for h in range(1, 5) for w in range(1, 5) if h * w >= 2]
    rng = np.random.default_rng(9)
    with criterion(9, "oracle dominance (200 labeled) and unlabeled minimality (100)") as info:
        used = {a: 0 for a in ("grh", "grlm", "arbitrary_half")}
        labeled = skipped = 0
        while labeled < 200:
            g = GridSpec(*shapes[rng.integers(len(shapes))])
            free = g.free_vertices()
            n = int(rng.integers(1, min(4, len(free)) + 1))
            inst = Instance(g, [free[k] for k in rng.choice(len(free), n, replace=False)], [free[k] for k in rng.choice(len(free), n, replace=False)])
            try:
                opt, witness = optimal_makespan_labeled(g, inst)
            except ValueError:  # e.g. an exchange on a 1-wide grid; no optimum to dominate
                skipped += 1
                continue
            labeled += 1
            assert compute_metrics(inst, witness).manhattan_lb <= opt
            for algo in used:
                try:
                    plan, _t = solve(inst, SolverConfig(algorithm=algo))
                except PreconditionError:
                    continue
                used[algo] += 1
                assert _valid(inst, plan)
                assert compute_metrics(inst, plan).makespan >= opt, (algo, inst)
                assert compute_metrics(inst, refine(plan)).makespan >= opt, (algo, inst)
        assert min(used.values()) > 0, used
        # GRM needs a full grid with both sides >= 3; 3x3 optima come from the full-density BFS
        dist = _full_density_distances((3, 3))
        g = GridSpec(3, 3)
        for s in range(20):
            inst = generate_instance((3, 3), 1.0, "random", s)
            state = np.empty(9, dtype=np.int64)
            for (sr, sc), (gr, gc) in zip(inst.starts, inst.goals):
                state[sr * 3 + sc] = gr * 3 + gc
            opt = int(dist[rank(state)])
            for algo in ("grm2", "grm4"):
                plan, _t = solve(inst, SolverConfig(algorithm=algo))
                assert _valid(inst, plan)
                assert compute_metrics(inst, plan).makespan >= opt, (algo, s)
            used["grm"] = used.get("grm", 0) + 2
        unl = 0
        for _ in range(100):
            g = GridSpec(*shapes[rng.integers(len(shapes))])
            free = g.free_vertices()
            n = int(rng.integers(1, min(4, len(free)) + 1))
            src = [free[k] for k in rng.choice(len(free), n, replace=False)]
            dst = [free[k] for k in rng.choice(len(free), n, replace=False)]
            opt, _ = optimal_makespan_unlabeled(g, src, dst)
            assert unlabeled_route(g, src, dst).makespan == opt
            unl += 1
        info["detail"] = f"solver runs {used}, infeasible redrawn={skipped}, unlabeled checks={unl}"


def test_c10_grlm():
    with criterion(10, "GRLM 16x16/32x16 at 1/2, merge bound, 0-1 principle") as info:
        for dims in ((16, 16), (32, 16)):
            m1, m2 = dims
            for s in SEEDS:
                inst = generate_instance(dims, 1 / 2, "random", s)
                plan, trace, _ = _timed_solve(inst, algorithm="grlm")
                assert _valid(inst, plan)
                # each shuffle phase is one batch of parallel band merges
                assert trace["shuffle1"].length <= linear_merge_bound(m2)
                assert trace["shuffle2"].length <= linear_merge_bound(m1)
                assert trace["shuffle3"].length <= linear_merge_bound(m2)
        for m in range(1, 17):
            bits = (np.arange(2**m)[:, None] >> np.arange(m)[None, :]) & 1
            order = np.argsort(bits, axis=1, kind="stable")
            targets = np.empty_like(order)
            np.put_along_axis(targets, order, np.arange(m)[None, :], axis=1)
            for chunk in np.array_split(targets, max(1, len(targets) // 4096)):
                traj, spans = linear_merge_batch(chunk)
                assert (spans <= linear_merge_bound(m)).all(), m
                assert batch_valid(traj).all(), m
                assert (traj[:, -1, :, 1] == chunk).all() and (traj[:, -1, :, 0] == 0).all(), m
        info["detail"] = "40 instances valid; all 0-1 inputs sorted for m=1..16"


def test_c11_grh3d():
    with criterion(11, "GRH3D 12x6x6 and 24x12x6 at 1/3") as info:
        parts = []
        for dims in ((12, 6, 6), (24, 12, 6)):
            bound = shuffle3d_bound(*dims, "grh")
            spans = []
            for s in SEEDS:
                inst = generate_instance(dims, 1 / 3, "random", s)
                plan, trace, _ = _timed_solve(inst, algorithm="grh")
                assert _valid(inst, plan)
                assert trace.shuffle_span <= bound, (dims, s, trace.shuffle_span)
                spans.append(trace.shuffle_span)
            parts.append(f"{'x'.join(map(str, dims))} max={max(spans)}/{bound}")
        info["detail"] = " ".join(parts)


def test_c12_substitutions_reported():
    with criterion(12, "substituted claims reported empirically") as info:
        with pytest.raises(ValueError):
            generate_swap_table((3, 4))  # 8-step table is out of reach
        rec = run_cell(Cell((18, 18), 1 / 3, "random", "grh"), 0, timing=False)
        assert rec.status == "valid"
        assert rec.manhattan_lb > 0 and rec.optimality_ratio == pytest.approx(rec.makespan / rec.manhattan_lb, abs=1e-6)
        info["detail"] = "no MILP gaps or large-scale ratios; manhattan_lb and ratio in every record; 3x4 table refused"
