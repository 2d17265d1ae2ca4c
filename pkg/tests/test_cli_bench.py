import json

import numpy as np
import pytest

from gridrearrange.animate import export_animation
from gridrearrange.bench import BenchmarkRecord, Cell, Sweep, run_benchmark, summarize
from gridrearrange.cli import main
from gridrearrange.grid import GridSpec, Instance, Plan
from gridrearrange.instances import (
    generate_instance,
    instance_from_json,
    instance_to_json,
    parse_dims,
    parse_map,
    parse_scen,
    scen_instance,
)
from gridrearrange.oracle import optimal_makespan_labeled

MAP = """type octile
height 4
width 5
map
.....
.@@..
...T.
.....
"""

SCEN = "version 1\n" + "\n".join(
    [
        "0\tt.map\t5\t4\t0\t0\t4\t3\t7.0",
        "0\tt.map\t5\t4\t4\t0\t0\t3\t7.0",
    ]
)


def test_parse_dims():
    assert parse_dims("12x6x6") == (12, 6, 6)
    with pytest.raises(ValueError):
        parse_dims("12")


def test_density_zero_is_empty():
    assert generate_instance((6, 6), 0.0).n == 0


def test_random_deterministic():
    a = generate_instance((9, 9), 1 / 3, "random", 4)
    b = generate_instance((9, 9), 1 / 3, "random", 4)
    assert a == b and a.n == 27


def test_sortation_pattern():
    inst = generate_instance((9, 9), 2 / 9, "sortation", 0)
    assert len(inst.grid.obstacles) == 9
    assert inst.n == 18
    assert all((r % 3, c % 3) == (1, 1) for r, c in inst.grid.obstacles)
    with pytest.raises(ValueError):
        generate_instance((9, 9), 0.3, "sortation", 0)


def test_squares_involution():
    inst = generate_instance((8, 8), 1.0, "squares", 0)
    assert inst.n == 64
    mirror = lambda v: (7 - v[0], 7 - v[1])
    assert all(g == mirror(s) for s, g in zip(inst.starts, inst.goals))
    back = dict(zip(inst.starts, inst.goals))
    assert all(back[back[s]] == s for s in inst.starts)


def test_squares_partial_rings_outer_first():
    inst = generate_instance((8, 8), 0.25, "squares", 0)
    ring = lambda v: min(v[0], v[1], 7 - v[0], 7 - v[1])
    assert max(ring(v) for v in inst.starts) == 0


def test_blocks_pattern():
    inst = generate_instance((12, 12), 0.5, "blocks", 1)
    b = 4
    for s, g in zip(inst.starts, inst.goals):
        assert (s[0] % b, s[1] % b) == (g[0] % b, g[1] % b)
    blocks = {((s[0] // b, s[1] // b), (g[0] // b, g[1] // b)) for s, g in zip(inst.starts, inst.goals)}
    src = [a for a, _ in blocks]
    assert len(src) == len(set(src))  # one destination per block


def test_instance_json_round_trip():
    inst = generate_instance((9, 9), 2 / 9, "sortation", 3)
    assert instance_from_json(instance_to_json(inst)) == inst


def test_map_and_scen():
    grid = parse_map(MAP)
    assert grid.shape == (4, 5)
    assert grid.obstacles == {(1, 1), (1, 2), (2, 3)}
    entries = parse_scen(SCEN)
    assert entries[0].start == (0, 0) and entries[0].goal == (3, 4)
    inst = scen_instance(grid, entries)
    assert inst.goals[1] == (3, 0)
    with pytest.raises(ValueError):
        parse_map("type octile\nheight 2\nwidth 2\nmap\n..\n")
    with pytest.raises(ValueError):
        parse_scen("0\tt.map\t5\t4\t0\t0\t4\t3\t7.0")


def test_empty_sweep():
    records, rows = run_benchmark(Sweep([], seeds=3))
    assert records == [] and rows == []


def test_invalid_records_excluded():
    ok = BenchmarkRecord([4, 4], 0.5, "random", 0, "grh", "lba", False, 3, makespan=5, soc=9, manhattan_lb=2, optimality_ratio=2.5)
    bad = BenchmarkRecord([4, 4], 0.5, "random", 1, "grh", "lba", False, 3, makespan=1, status="invalid")
    (row,) = summarize([ok, bad])
    assert row["runs"] == 2 and row["valid"] == 1 and row["makespan_mean"] == 5


def test_errors_recorded():
    records, _ = run_benchmark(Sweep([Cell((6, 6), 0.9, "random", "grh")], seeds=1))
    assert records[0].status == "error" and "agents exceed" in records[0].error


def test_sweep_byte_identical(tmp_path):
    sweep = Sweep([Cell((9, 9), 1 / 3, "random", "grh", "hall"), Cell((9, 9), 1 / 3, "random", "grh", "lba", True)], seeds=2, timing=False)
    run_benchmark(sweep, tmp_path / "a")
    run_benchmark(sweep, tmp_path / "b")
    a = (tmp_path / "a" / "results.jsonl").read_bytes()
    assert a == (tmp_path / "b" / "results.jsonl").read_bytes()
    assert len(a.splitlines()) == 4
    header = (tmp_path / "a" / "summary.txt").read_text().splitlines()[0].split()
    assert header[:4] == ["dims", "density", "pattern", "algorithm"]


def test_animation_frames(tmp_path):
    g = GridSpec(2, 3)
    free = g.free_vertices()
    goals = list(free)
    goals[0], goals[1] = free[1], free[0]
    _, plan = optimal_makespan_labeled(g, Instance(g, free, goals))
    files = export_animation(plan, g, tmp_path / "f")
    assert len(files) == 4
    again = export_animation(plan, g, tmp_path / "g")
    assert all(a.read_bytes() == b.read_bytes() for a, b in zip(files, again))
    single = export_animation(Plan.stationary([(0, 0)]), g, tmp_path / "s")
    assert len(single) == 1


def test_cli_round_trip(tmp_path, capsys):
    inst = tmp_path / "i.json"
    plan = tmp_path / "p.json"
    assert main(["gen", "--dims", "9x9", "--density", "0.25", "--out", str(inst)]) == 0
    assert main(["solve", "--instance", str(inst), "--refine", "--out", str(plan)]) == 0
    assert main(["validate", "--instance", str(inst), "--plan", str(plan)]) == 0
    assert "valid" in capsys.readouterr().out
    doc = json.loads(plan.read_text())
    doc["agents"][0]["path"][-1] = [8, 8]
    plan.write_text(json.dumps(doc))
    assert main(["validate", "--instance", str(inst), "--plan", str(plan)]) == 1


def test_cli_bench_and_animate(tmp_path, capsys):
    assert main(["bench", "--dims", "9x9", "--seeds", "2", "--no-timing", "--out", str(tmp_path / "b")]) == 0
    assert "grh" in capsys.readouterr().out
    inst = tmp_path / "i.json"
    plan = tmp_path / "p.json"
    main(["gen", "--dims", "9x9", "--density", "0.2", "--out", str(inst)])
    main(["solve", "--instance", str(inst), "--out", str(plan)])
    assert main(["animate", "--instance", str(inst), "--plan", str(plan), "--out", str(tmp_path / "fr")]) == 0
    n = len(list((tmp_path / "fr").glob("*.svg")))
    assert n == Plan.from_json(plan.read_text()).makespan + 1


def test_cli_map_scen(tmp_path, capsys):
    open_map = "type octile\nheight 6\nwidth 6\nmap\n" + "......\n" * 6
    (tmp_path / "o.map").write_text(open_map)
    (tmp_path / "t.map").write_text(MAP)
    (tmp_path / "t.scen").write_text(SCEN)
    scen = str(tmp_path / "t.scen")
    assert main(["solve", "--map", str(tmp_path / "o.map"), "--scen", scen]) == 0
    # irregular obstacles are outside every pipeline's precondition
    assert main(["solve", "--map", str(tmp_path / "t.map"), "--scen", scen]) == 2
    assert "error" in capsys.readouterr().err


def test_scenario_agents_subset():
    grid = parse_map(MAP)
    inst = scen_instance(grid, parse_scen(SCEN), 1)
    assert inst.n == 1
    assert np.array_equal(np.array(inst.starts), [[0, 0]])
