import numpy as np
import pytest

from gridrearrange.grid import GridSpec, Instance, compute_metrics, validate_plan
from gridrearrange.matching import build_color_row_graph
from gridrearrange.shuffles import linear_merge_bound
from gridrearrange.solvers import (
    PreconditionError,
    SolverConfig,
    solve,
    solve_3d,
    solve_arbitrary_half,
    solve_grh,
    solve_grlm,
    solve_grm,
)
from gridrearrange.solvers.common import SHUFFLE_PHASES, matching_bottleneck, order_matchings
from gridrearrange.solvers.grm import grm_bound
from gridrearrange.solvers.sparse import grh_shuffle_bound
from gridrearrange.unlabeled import cell_centers

from conftest import random_instance


def full_instance(m1, m2, seed):
    g = GridSpec(m1, m2)
    free = g.free_vertices()
    perm = np.random.default_rng(seed).permutation(len(free))
    return Instance(g, free, [free[k] for k in perm])


def _ok(inst, plan):
    return validate_plan(inst.grid, inst, plan).valid


def _trace_consistent(plan, trace, refined=False):
    assert trace.concat() == plan or refined
    for a, b in zip(trace.phases, trace.phases[1:]):
        assert b.offset == a.offset + a.length
        assert np.array_equal(a.plan.at(a.length), b.plan.at(0))


# ---------------------------------------------------------------- full density


def test_grm_identity():
    g = GridSpec(6, 4)
    free = g.free_vertices()
    plan, _ = solve_grm(Instance(g, free, free))
    assert plan.trimmed().makespan == 0


@pytest.mark.parametrize("variant,block", [("block2", 2), ("block4", 4)])
@pytest.mark.parametrize("seed", range(3))
def test_grm_random(variant, block, seed):
    inst = full_instance(12, 9, seed)
    plan, trace = solve_grm(inst, variant)
    assert _ok(inst, plan)
    assert plan.makespan <= grm_bound(12, 9, block)
    _trace_consistent(plan, trace)
    # after the column phase every agent sits in its goal row
    mid = trace["shuffle2"].plan
    assert np.array_equal(mid.at(mid.makespan)[:, 0], np.array(inst.goals)[:, 0])


def test_grm_preconditions():
    with pytest.raises(PreconditionError):
        solve_grm(random_instance(6, 6, 10, 0))
    with pytest.raises(PreconditionError):
        solve_grm(full_instance(3, 6, 0))
    with pytest.raises(ValueError):
        solve_grm(full_instance(6, 6, 0), "block3")


def test_lba_never_worse_than_hall():
    for seed in range(5):
        inst = full_instance(12, 9, seed)
        start = np.array(inst.starts)
        goal = np.array(inst.goals)
        graph = build_color_row_graph(goal[:, 0], start[:, 0], 12, 9)
        cost = lambda p, k: np.abs(start[np.asarray(p), 1] - k)
        hall = matching_bottleneck(order_matchings(graph, "hall", cost), cost)
        lba = matching_bottleneck(order_matchings(graph, "lba", cost), cost)
        assert lba <= hall


# ---------------------------------------------------------------- one third


@pytest.mark.parametrize("seed", range(3))
def test_grh_random(seed):
    inst = random_instance(18, 18, 108, seed)
    plan, trace = solve_grh(inst)
    assert _ok(inst, plan)
    assert trace.span(SHUFFLE_PHASES) <= grh_shuffle_bound(18, 18)
    _trace_consistent(plan, trace)


def test_grh_identity_on_slots():
    g = GridSpec(9, 9)
    slots = [(3 * i + 1, 3 * j + c) for i in range(3) for j in range(3) for c in range(3)]
    plan, trace = solve_grh(Instance(g, slots, slots))
    assert plan.trimmed().makespan == 0


def test_grh_sortation_obstacles():
    obs = cell_centers(18, 18)
    inst = random_instance(18, 18, 72, 4, obs)
    plan, trace = solve_grh(inst)
    assert _ok(inst, plan)
    visited = {tuple(v) for v in plan.paths.reshape(-1, 2).tolist()}
    assert not visited & obs


def test_grh_transposed_schedule():
    inst = random_instance(12, 18, 72, 1)
    plan, trace = solve_grh(inst, SolverConfig(transpose=True))
    assert _ok(inst, plan)
    _trace_consistent(plan, trace)


def test_grh_residual_lines():
    inst = random_instance(20, 16, 60, 2)
    plan, _ = solve_grh(inst)
    assert _ok(inst, plan)


def test_grh_capacity_error():
    with pytest.raises(PreconditionError):
        solve_grh(random_instance(9, 9, 28, 0))
    with pytest.raises(PreconditionError):
        solve_grh(random_instance(9, 9, 10, 0, [(0, 0)]))


def test_grh_refine_flag():
    inst = random_instance(18, 18, 108, 7)
    base, _ = solve_grh(inst)
    ref, trace = solve_grh(inst, SolverConfig(refine=True))
    assert _ok(inst, ref)
    assert compute_metrics(inst, ref).makespan <= compute_metrics(inst, base).makespan
    assert trace.concat() == base


# ---------------------------------------------------------------- one half


@pytest.mark.parametrize("shape", [(16, 16), (32, 16)])
def test_grlm_random(shape):
    m1, m2 = shape
    inst = random_instance(m1, m2, m1 * m2 // 2, 0)
    plan, trace = solve_grlm(inst)
    assert _ok(inst, plan)
    assert trace["shuffle1"].length <= linear_merge_bound(m2)
    assert trace["shuffle2"].length <= linear_merge_bound(m1)
    assert trace["shuffle3"].length <= linear_merge_bound(m2)
    _trace_consistent(plan, trace)


def test_grlm_preconditions():
    with pytest.raises(PreconditionError):
        solve_grlm(random_instance(5, 8, 10, 0))
    with pytest.raises(PreconditionError):
        solve_grlm(random_instance(4, 4, 9, 0))


# ---------------------------------------------------------------- arbitrary


def corner_blocks(m, n):
    g = GridSpec(m, m)
    side = int(np.ceil(np.sqrt(n)))
    starts = [(r, c) for r in range(side) for c in range(side)][:n]
    goals = [(m - 1 - r, m - 1 - c) for r, c in starts]
    return Instance(g, starts, goals)


def test_arbitrary_corner_blocks():
    inst = corner_blocks(12, 48)
    plan, trace = solve_arbitrary_half(inst)
    assert _ok(inst, plan)
    assert trace["unlabeled_in"].length <= 24 and trace["unlabeled_out"].length <= 24
    assert plan.makespan <= 3 * 12 + 4 * 12 + 18


def test_arbitrary_uses_half_layout():
    inst = random_instance(12, 12, 72, 3)
    plan, trace = solve_arbitrary_half(inst)
    assert _ok(inst, plan)


def test_arbitrary_matches_grh_middle():
    inst = random_instance(18, 18, 100, 5)
    a, ta = solve_arbitrary_half(inst)
    b, tb = solve_grh(inst)
    assert ta.span(SHUFFLE_PHASES) == tb.span(SHUFFLE_PHASES)
    assert a.makespan == b.makespan


# ---------------------------------------------------------------- 3D


def random_3d(shape, n, seed):
    g = GridSpec(*shape)
    free = g.free_vertices()
    rng = np.random.default_rng(seed)
    return Instance(g, [free[k] for k in rng.choice(len(free), n, replace=False)], [free[k] for k in rng.choice(len(free), n, replace=False)])


def test_grh3d_random():
    inst = random_3d((12, 6, 6), 144, 0)
    plan, trace = solve_3d(inst, "grh")
    assert _ok(inst, plan)
    assert trace.span(["zshuffle1", *SHUFFLE_PHASES, "zshuffle2"]) <= 12 + 12 + 12 + 24
    assert trace["zshuffle1"].length <= 6 + 5 and trace["zshuffle2"].length <= 6 + 5
    _trace_consistent(plan, trace)


def test_grlm3d_and_grm3d():
    inst = random_3d((8, 8, 4), 128, 1)
    plan, _ = solve_3d(inst, "grlm")
    assert _ok(inst, plan)
    g = GridSpec(6, 6, 4)
    free = g.free_vertices()
    perm = np.random.default_rng(0).permutation(len(free))
    inst = Instance(g, free, [free[k] for k in perm])
    plan, _ = solve_3d(inst, "grm")
    assert _ok(inst, plan)


def test_3d_identity_and_errors():
    g = GridSpec(6, 6, 3)
    slots = [(3 * i + 1, 3 * j + c, z) for i in range(2) for j in range(2) for c in range(3) for z in range(3)]
    plan, _ = solve_3d(Instance(g, slots, slots), "grh")
    assert plan.trimmed().makespan == 0
    with pytest.raises(PreconditionError):
        solve_3d(random_3d((4, 6, 6), 10, 0), "grh")


def test_dispatch():
    inst = random_instance(12, 12, 40, 0)
    for algo in ("grh", "grlm", "arbitrary_half"):
        plan, _ = solve(inst, SolverConfig(algorithm=algo, refine=True))
        assert _ok(inst, plan)
    full = full_instance(6, 6, 0)
    plan, _ = solve(full, SolverConfig(algorithm="grm2"))
    assert _ok(full, plan)
    with pytest.raises(ValueError):
        SolverConfig(algorithm="cbs")
