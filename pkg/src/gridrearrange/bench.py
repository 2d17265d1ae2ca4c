"""Benchmark sweeps: solve, validate, record and aggregate."""
from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .grid import compute_metrics, validate_plan
from .instances import generate_instance
from .solvers import SolverConfig, solve


@dataclass(frozen=True)
class Cell:
    dims: tuple
    density: float
    pattern: str
    algorithm: str
    matching: str = "lba"
    refine: bool = False


@dataclass
class Sweep:
    cells: list = field(default_factory=list)
    seeds: int = 20
    timing: bool = True
    workers: int = 1


@dataclass
class BenchmarkRecord:
    dims: list
    density: float
    pattern: str
    seed: int
    algorithm: str
    matching: str
    refine: bool
    n: int
    makespan: int | None = None
    soc: int | None = None
    manhattan_lb: int | None = None
    optimality_ratio: float | None = None
    solve_ms: float = 0.0
    refine_ms: float = 0.0
    status: str = "valid"
    error: str = ""


def run_cell(cell: Cell, seed: int, timing: bool = True) -> BenchmarkRecord:
    """Solve one instance; failures become records rather than exceptions."""
    inst = generate_instance(cell.dims, cell.density, cell.pattern, seed)
    rec = BenchmarkRecord(list(cell.dims), cell.density, cell.pattern, seed, cell.algorithm, cell.matching, cell.refine, inst.n)
    cfg = SolverConfig(algorithm=cell.algorithm, dimension=len(cell.dims), matching_mode=cell.matching, seed=seed)
    try:
        t0 = time.perf_counter()
        plan, _ = solve(inst, cfg)
        t1 = time.perf_counter()
        if cell.refine:
            from .refine import refine

            plan = refine(plan, check=False)
        t2 = time.perf_counter()
    except Exception as e:  # recorded, sweep continues
        rec.status = "error"
        rec.error = f"{type(e).__name__}: {e}"
        return rec
    if timing:
        rec.solve_ms = round((t1 - t0) * 1e3, 3)
        rec.refine_ms = round((t2 - t1) * 1e3, 3)
    report = validate_plan(inst.grid, inst, plan)
    if not report.valid:
        rec.status = "invalid"
        rec.error = str(report.violations[0])
        return rec
    m = compute_metrics(inst, plan)
    rec.makespan, rec.soc, rec.manhattan_lb = m.makespan, m.soc, m.manhattan_lb
    rec.optimality_ratio = None if m.optimality_ratio is None else round(m.optimality_ratio, 6)
    return rec


def _job(args):
    return run_cell(*args)


def run_benchmark(sweep: Sweep, out_dir: str | Path | None = None) -> tuple[list, list]:
    """Run every cell for ``sweep.seeds`` seeds; returns ``(records, summary rows)``.

    With ``out_dir`` the records go to ``results.jsonl`` (in sweep order, one
    writer) and the summary to ``summary.txt``.
    """
    jobs = [(c, s, sweep.timing) for c in sweep.cells for s in range(sweep.seeds)]
    if sweep.workers > 1 and jobs:
        with ProcessPoolExecutor(sweep.workers) as ex:
            records = list(ex.map(_job, jobs))
    else:
        records = [_job(j) for j in jobs]
    rows = summarize(records)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "results.jsonl", "w") as f:
            for r in records:
                f.write(json.dumps(asdict(r), sort_keys=True) + "\n")
        (out / "summary.txt").write_text(format_summary(rows))
    return records, rows


def summarize(records) -> list[dict]:
    """Mean/max per cell over valid records only."""
    groups: dict = {}
    for r in records:
        key = (tuple(r.dims), r.density, r.pattern, r.algorithm, r.matching, r.refine)
        groups.setdefault(key, []).append(r)
    rows = []
    for key, rs in groups.items():
        ok = [r for r in rs if r.status == "valid"]
        row = dict(zip(("dims", "density", "pattern", "algorithm", "matching", "refine"), key))
        row["runs"] = len(rs)
        row["valid"] = len(ok)
        if ok:
            ms = np.array([r.makespan for r in ok], dtype=float)
            ratios = [r.optimality_ratio for r in ok if r.optimality_ratio is not None]
            row.update(
                makespan_mean=round(float(ms.mean()), 3),
                makespan_max=int(ms.max()),
                soc_mean=round(float(np.mean([r.soc for r in ok])), 3),
                ratio_mean=round(float(np.mean(ratios)), 4) if ratios else None,
                solve_ms_mean=round(float(np.mean([r.solve_ms for r in ok])), 3),
            )
        rows.append(row)
    return rows


def format_summary(rows) -> str:
    cols = ("dims", "density", "pattern", "algorithm", "matching", "refine", "runs", "valid", "makespan_mean", "makespan_max", "ratio_mean", "solve_ms_mean")
    table = [cols] + [tuple(_fmt(r.get(c)) for c in cols) for r in rows]
    widths = [max(len(str(row[k])) for row in table) for k in range(len(cols))]
    return "\n".join("  ".join(str(v).rjust(w) for v, w in zip(row, widths)) for row in table) + "\n"


def _fmt(v):
    if isinstance(v, tuple):
        return "x".join(map(str, v))
    if v is None:
        return "-"
    return v
