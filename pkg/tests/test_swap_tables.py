import numpy as np
import pytest

from gridrearrange.grid import GridSpec, Instance, Plan, validate_plan
from gridrearrange.swap_tables import (
    SUPPORTED_SHAPES,
    all_patterns,
    dump_table,
    generate_swap_table,
    get_swap_table,
    load_table,
)

EXPECTED_MAX = {(3, 2): 7, (4, 2): 6, (2, 3): 6, (3, 3): 7, (2, 4): 6}


def as_plan(table, pattern):
    h, w = table.shape
    pos = table.positions(pattern)
    coords = np.stack([pos // w, pos % w], axis=-1).transpose(1, 0, 2)
    return Plan(coords)


def instance_for(shape, pattern):
    h, w = shape
    starts = [(r, c) for r in range(h) for c in range(w)]
    goals = [(r, pattern[r][c]) for r, c in starts]
    return Instance(GridSpec(h, w), starts, goals)


@pytest.mark.parametrize("shape", SUPPORTED_SHAPES)
def test_max_steps(shape):
    assert get_swap_table(shape).max_steps == EXPECTED_MAX[shape]


@pytest.mark.parametrize("shape", [(3, 2), (2, 3), (4, 2), (2, 4)])
def test_every_plan_validates(shape):
    table = get_swap_table(shape)
    for pattern in all_patterns(*shape):
        inst = instance_for(shape, pattern)
        plan = as_plan(table, pattern)
        assert validate_plan(inst.grid, inst, plan).valid
        assert plan.makespan == table.steps(pattern)


def test_identity_is_zero():
    for shape in SUPPORTED_SHAPES:
        h, w = shape
        ident = tuple(tuple(range(w)) for _ in range(h))
        assert get_swap_table(shape).steps(ident) == 0


def test_named_witnesses():
    assert get_swap_table((2, 3)).steps(((1, 0, 2), (0, 1, 2))) == 3
    assert get_swap_table((3, 2)).steps(((1, 0), (1, 0), (1, 0))) == 7


def test_cache_roundtrip_and_version(tmp_path, monkeypatch):
    table = generate_swap_table((3, 2))
    blob = dump_table(table)
    back = load_table(blob)
    assert back.plans == table.plans and np.array_equal(back.moves, table.moves)
    bumped = blob[:4] + (99).to_bytes(2, "little") + blob[6:]
    with pytest.raises(ValueError):
        load_table(bumped)


def test_regeneration_is_deterministic():
    a = generate_swap_table((2, 3))
    b = generate_swap_table((2, 3))
    assert a.plans == b.plans


def test_unsupported_shape():
    with pytest.raises(ValueError):
        generate_swap_table((3, 4))
