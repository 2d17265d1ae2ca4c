"""Command line: gen, solve, validate, bench, animate."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .animate import export_animation
from .bench import Cell, Sweep, format_summary, run_benchmark
from .grid import Plan, compute_metrics, validate_plan
from .instances import (
    PATTERNS,
    generate_instance,
    instance_from_json,
    instance_to_json,
    parse_dims,
    parse_map,
    parse_scen,
    scen_instance,
)
from .solvers import PreconditionError, SolverConfig, solve
from .solvers.common import ALGORITHMS


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--algo", default="grh", choices=ALGORITHMS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--density", type=float, default=1 / 3)
    p.add_argument("--dims", default="18x18", help="m1xm2 or m1xm2xm3")
    p.add_argument("--pattern", default="random", choices=PATTERNS)
    p.add_argument("--matching", default="lba", choices=("hall", "lba"))
    p.add_argument("--refine", action="store_true")
    p.add_argument("--out", default=None)


def _load_instance(args):
    if getattr(args, "instance", None):
        return instance_from_json(Path(args.instance).read_text())
    if getattr(args, "map", None):
        grid = parse_map(Path(args.map).read_text())
        return scen_instance(grid, parse_scen(Path(args.scen).read_text()), args.agents)
    return generate_instance(parse_dims(args.dims), args.density, args.pattern, args.seed)


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text + "\n")


def cmd_gen(args) -> int:
    _emit(instance_to_json(_load_instance(args)), args.out)
    return 0


def cmd_solve(args) -> int:
    inst = _load_instance(args)
    cfg = SolverConfig(
        algorithm=args.algo,
        dimension=inst.grid.dim,
        matching_mode=args.matching,
        refine=args.refine,
        seed=args.seed,
        transpose=args.transpose,
    )
    try:
        plan, trace = solve(inst, cfg)
    except PreconditionError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    m = compute_metrics(inst, plan)
    ok = validate_plan(inst.grid, inst, plan).valid
    phases = " ".join(f"{p.name}={p.length}" for p in trace.phases)
    print(f"agents={inst.n} makespan={m.makespan} soc={m.soc} lb={m.manhattan_lb} ratio={m.optimality_ratio} valid={ok}", file=sys.stderr)
    print(f"phases: {phases}", file=sys.stderr)
    if args.out:
        Path(args.out).write_text(plan.to_json())
    return 0 if ok else 1


def cmd_validate(args) -> int:
    inst = instance_from_json(Path(args.instance).read_text())
    plan = Plan.from_json(Path(args.plan).read_text())
    report = validate_plan(inst.grid, inst, plan)
    if report.valid:
        m = compute_metrics(inst, plan)
        print(f"valid makespan={m.makespan} soc={m.soc}")
        return 0
    for v in report.violations[:20]:
        print(v)
    print(f"invalid: {len(report.violations)} violations")
    return 1


def cmd_bench(args) -> int:
    dims_list = [parse_dims(d) for d in args.dims.split(",")]
    algos = args.algo_list.split(",") if args.algo_list else [args.algo]
    matchings = args.matchings.split(",") if args.matchings else [args.matching]
    refines = [False, True] if args.both_refine else [args.refine]
    cells = [
        Cell(d, args.density, args.pattern, a, mm, rf)
        for d in dims_list
        for a in algos
        for mm in matchings
        for rf in refines
    ]
    sweep = Sweep(cells, seeds=args.seeds, timing=not args.no_timing, workers=args.workers)
    _, rows = run_benchmark(sweep, args.out)
    sys.stdout.write(format_summary(rows))
    return 0


def cmd_animate(args) -> int:
    inst = instance_from_json(Path(args.instance).read_text())
    plan = Plan.from_json(Path(args.plan).read_text())
    files = export_animation(plan, inst.grid, args.out or "frames", inst.goals)
    print(f"wrote {len(files)} frames")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gridrearrange", description="Grid rearrangement multi-agent path planning")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("gen", help="generate an instance as JSON")
    _common(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("solve", help="solve an instance and write the plan")
    _common(p)
    p.add_argument("--instance", help="instance JSON (otherwise generated from flags)")
    p.add_argument("--map", help="grid-benchmark map file")
    p.add_argument("--scen", help="scenario file (with --map)")
    p.add_argument("--agents", type=int, default=None, help="first N scenario agents")
    p.add_argument("--transpose", action="store_true", help="column-row-column schedule")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("validate", help="check a plan against an instance")
    p.add_argument("--instance", required=True)
    p.add_argument("--plan", required=True)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("bench", help="run a benchmark sweep")
    _common(p)
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--algo-list", default=None, help="comma-separated algorithms")
    p.add_argument("--matchings", default=None, help="comma-separated matching modes")
    p.add_argument("--both-refine", action="store_true", help="run each cell with and without refinement")
    p.add_argument("--no-timing", action="store_true", help="omit wall-clock fields for byte-stable output")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("animate", help="write SVG frames of a plan")
    p.add_argument("--instance", required=True)
    p.add_argument("--plan", required=True)
    p.add_argument("--out", default="frames")
    p.set_defaults(func=cmd_animate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
