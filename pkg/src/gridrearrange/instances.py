"""Instance generators and file formats (JSON, grid-benchmark map/scenario)."""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .grid import GridSpec, Instance
from .unlabeled import cell_centers

PATTERNS = ("random", "squares", "blocks", "sortation")
SORTATION_DENSITY = 2 / 9


def parse_dims(text: str) -> tuple[int, ...]:
    """``"30x20"`` or ``"12x6x6"`` to a tuple of ints."""
    parts = tuple(int(p) for p in text.lower().split("x"))
    if len(parts) not in (2, 3) or min(parts) < 1:
        raise ValueError(f"bad dimensions {text!r}")
    return parts


def _count(density: float, total: int) -> int:
    if not 0 <= density <= 1:
        raise ValueError("density must lie in [0, 1]")
    return int(np.floor(density * total + 1e-9))


def generate_instance(dims, density: float, pattern: str = "random", seed: int = 0, block: int | None = None) -> Instance:
    """Deterministic instance for ``dims`` at ``density`` (fraction of all vertices)."""
    dims = tuple(int(d) for d in dims)
    rng = np.random.default_rng(seed)
    total = int(np.prod(dims))
    n = _count(density, total)
    if pattern == "sortation":
        if len(dims) != 2:
            raise ValueError("sortation grids are 2D")
        if density > SORTATION_DENSITY + 1e-9:
            raise ValueError(f"sortation density is at most 2/9, got {density}")
        grid = GridSpec(*dims, obstacles=cell_centers(*dims))
        return _random(grid, n, rng)
    grid = GridSpec(*dims)
    if pattern == "random":
        return _random(grid, n, rng)
    if pattern == "squares":
        return _squares(grid, n)
    if pattern == "blocks":
        return _blocks(grid, n, rng, block)
    raise ValueError(f"unknown pattern {pattern!r}")


def _random(grid: GridSpec, n: int, rng) -> Instance:
    free = grid.free_vertices()
    if n > len(free):
        raise ValueError(f"{n} agents do not fit {len(free)} free vertices")
    s = rng.choice(len(free), n, replace=False)
    g = rng.choice(len(free), n, replace=False)
    return Instance(grid, [free[k] for k in s], [free[k] for k in g])


def _mirror(grid: GridSpec, v):
    return tuple(d - 1 - c for d, c in zip(grid.shape, v))


def _squares(grid: GridSpec, n: int) -> Instance:
    """Concentric rings filled from the outside; goals are point reflections."""
    shape = grid.shape
    ring = lambda v: min(min(c, d - 1 - c) for c, d in zip(v[:2], shape[:2]))
    verts = sorted(grid.free_vertices(), key=lambda v: (ring(v), v))
    chosen: list = []
    seen: set = set()
    for v in verts:
        if len(chosen) >= n:
            break
        if v in seen:
            continue
        w = _mirror(grid, v)
        pair = [v] if w == v else [v, w]
        if len(chosen) + len(pair) > n:
            continue
        chosen.extend(pair)
        seen.update(pair)
    return Instance(grid, chosen, [_mirror(grid, v) for v in chosen])


def _blocks(grid: GridSpec, n: int, rng, block: int | None) -> Instance:
    """Equal square blocks; each block's agents move to a random other block."""
    shape = grid.shape
    b = block or max(1, min(shape[:2]) // 3)
    nb = [d // b for d in shape[:2]]
    if min(nb) < 1:
        raise ValueError("block size exceeds the grid")
    B = nb[0] * nb[1]
    cap = B * b * b * (shape[2] if len(shape) == 3 else 1)
    if n > cap:
        raise ValueError(f"{n} agents do not fit {cap} block vertices")
    perm = rng.permutation(B)
    cells = [v for v in grid.free_vertices() if v[0] < nb[0] * b and v[1] < nb[1] * b]
    pick = rng.choice(len(cells), n, replace=False)
    starts, goals = [], []
    for k in sorted(pick.tolist()):
        v = cells[k]
        blk = (v[0] // b) * nb[1] + v[1] // b
        t = int(perm[blk])
        off = (v[0] % b, v[1] % b)
        goals.append(((t // nb[1]) * b + off[0], (t % nb[1]) * b + off[1]) + tuple(v[2:]))
        starts.append(v)
    return Instance(grid, starts, goals)


# ------------------------------------------------------------------- JSON


def instance_to_json(inst: Instance) -> str:
    g = inst.grid
    doc = {
        "dims": list(g.shape),
        "obstacles": sorted(list(v) for v in g.obstacles),
        "starts": [list(v) for v in inst.starts],
        "goals": [list(v) for v in inst.goals],
    }
    return json.dumps(doc, separators=(",", ":"))


def instance_from_json(text: str) -> Instance:
    doc = json.loads(text)
    dims = doc["dims"]
    grid = GridSpec(*dims, obstacles=frozenset(tuple(v) for v in doc.get("obstacles", [])))
    return Instance(grid, [tuple(v) for v in doc["starts"]], [tuple(v) for v in doc["goals"]])


# ------------------------------------------------------- grid benchmark files

BLOCKED = frozenset("@OTW")
FREE = frozenset(".GS")


def parse_map(text: str) -> GridSpec:
    """Grid-benchmark ``.map`` text; rows are y, columns are x."""
    lines = text.splitlines()
    header: dict = {}
    k = 0
    while k < len(lines) and lines[k].strip().lower() != "map":
        parts = lines[k].split()
        if len(parts) == 2:
            header[parts[0].lower()] = parts[1]
        k += 1
    if k == len(lines):
        raise ValueError("map section missing")
    try:
        h, w = int(header["height"]), int(header["width"])
    except KeyError as e:
        raise ValueError(f"header field {e.args[0]} missing") from None
    rows = lines[k + 1 : k + 1 + h]
    if len(rows) != h or any(len(r) < w for r in rows):
        raise ValueError("map body does not match its header")
    obs = set()
    for y, row in enumerate(rows):
        for x, ch in enumerate(row[:w]):
            if ch in BLOCKED:
                obs.add((y, x))
            elif ch not in FREE:
                raise ValueError(f"unknown map symbol {ch!r} at {(y, x)}")
    return GridSpec(h, w, obstacles=frozenset(obs))


@dataclass(frozen=True)
class ScenEntry:
    bucket: int
    map_name: str
    width: int
    height: int
    start: tuple  # (row, col)
    goal: tuple
    optimal: float


def parse_scen(text: str) -> list[ScenEntry]:
    lines = [l for l in text.splitlines() if l.strip()]
    if not lines or not lines[0].lower().startswith("version"):
        raise ValueError("scenario header missing")
    out = []
    for ln in lines[1:]:
        f = ln.split("\t")
        if len(f) != 9:
            raise ValueError(f"scenario line has {len(f)} fields: {ln!r}")
        out.append(ScenEntry(int(f[0]), f[1], int(f[2]), int(f[3]), (int(f[5]), int(f[4])), (int(f[7]), int(f[6])), float(f[8])))
    return out


def scen_instance(grid: GridSpec, entries: list[ScenEntry], n: int | None = None) -> Instance:
    entries = entries if n is None else entries[:n]
    return Instance(grid, [e.start for e in entries], [e.goal for e in entries])
