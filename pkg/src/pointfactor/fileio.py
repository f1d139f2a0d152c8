"""Readers and writers for the run artifact formats.

Every writer is deterministic: fixed column orders, fixed float
formatting (17 significant digits for coordinates, shortest round-trip
repr elsewhere), sorted JSON keys, and no timestamps.  Re-running a
seeded experiment therefore reproduces artifacts byte for byte.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .forest import FactorGraph, Matching
from .metric import MetricWindow
from .mnnmatch import ChainReport, MnnResult
from .pointgen import PointConfiguration


def _coord(x: float) -> str:
    return format(float(x), ".17g")


def write_points(cfg: PointConfiguration, path) -> None:
    d = cfg.window.dimension
    lines = ["id," + ",".join(f"x{i + 1}" for i in range(d))]
    for i, p in enumerate(cfg.points):
        lines.append(f"{i}," + ",".join(_coord(x) for x in p))
    Path(path).write_text("\n".join(lines) + "\n")


def read_points(path, window: MetricWindow, rng_seed: int = 0) -> PointConfiguration:
    lines = Path(path).read_text().splitlines()
    header = lines[0].split(",")
    if header[0] != "id" or len(header) != window.dimension + 1:
        raise ValueError(f"unexpected point file header {lines[0]!r}")
    pts = []
    for line in lines[1:]:
        cells = line.split(",")
        pts.append([float(c) for c in cells[1:]])
    arr = np.array(pts, dtype=float) if pts else np.empty((0, window.dimension))
    return PointConfiguration(window, arr, rng_seed=rng_seed)


def write_graph(graph: FactorGraph, path) -> None:
    if graph.directed:
        lines = ["u,v,directed"]
        lines.extend(f"{u},{v},1" for u, v in graph.edges)
    else:
        lines = ["u,v"]
        lines.extend(f"{u},{v}" for u, v in graph.edges)
    Path(path).write_text("\n".join(lines) + "\n")


def read_graph(path, n: int) -> FactorGraph:
    lines = Path(path).read_text().splitlines()
    directed = lines[0].startswith("u,v,directed")
    edges = []
    for line in lines[1:]:
        cells = line.split(",")
        edges.append((int(cells[0]), int(cells[1])))
    return FactorGraph(n, edges, directed=directed)


def write_ordering(order: list[int], path) -> None:
    lines = ["rank,id"]
    lines.extend(f"{rank},{i}" for rank, i in enumerate(order))
    Path(path).write_text("\n".join(lines) + "\n")


def write_matching(matching: Matching, path) -> None:
    lines = ["id,partner"]
    for i in range(matching.n):
        j = matching.partner.get(i)
        lines.append(f"{i},{'' if j is None else j}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_matching(path, n: int) -> Matching:
    lines = Path(path).read_text().splitlines()
    partner: dict[int, int] = {}
    for line in lines[1:]:
        cells = line.split(",")
        if cells[1] != "":
            partner[int(cells[0])] = int(cells[1])
    return Matching(n, partner)


def write_mnn_rounds(result: MnnResult, cfg: PointConfiguration, path) -> None:
    lines = ["id,round,annihilation_time"]
    for i in range(cfg.n):
        if i in result.round_of_pair:
            lines.append(
                f"{i},{result.round_of_pair[i]},{result.annihilation_time(cfg, i)!r}"
            )
        else:
            lines.append(f"{i},,")
    Path(path).write_text("\n".join(lines) + "\n")


def write_hierarchy(hierarchy, path) -> None:
    lines = ["level,point_id,clump_id"]
    for level in range(1, hierarchy.k_max + 1):
        lab = hierarchy.labels[level]
        lines.extend(f"{level},{i},{int(lab[i])}" for i in range(len(lab)))
    Path(path).write_text("\n".join(lines) + "\n")


def write_cutters(hierarchy, path) -> None:
    lines = ["level,center_id,radius"]
    for level in range(1, hierarchy.k_max + 1):
        lines.extend(
            f"{level},{c.center_id},{c.radius!r}" for c in hierarchy.cutters[level]
        )
    Path(path).write_text("\n".join(lines) + "\n")


def write_chain_report(report: ChainReport, path) -> None:
    payload = {
        "longest": report.longest,
        "length": report.length,
        "histogram": {str(k): v for k, v in sorted(report.histogram.items())},
        "lower_bound_flag": report.lower_bound,
    }
    write_json(payload, path)


def write_survival(table: list[tuple[float, float]], path) -> None:
    lines = ["r,fraction"]
    lines.extend(f"{r!r},{frac!r}" for r, frac in table)
    Path(path).write_text("\n".join(lines) + "\n")


def read_survival(path) -> list[tuple[float, float]]:
    lines = Path(path).read_text().splitlines()
    return [
        (float(a), float(b))
        for a, b in (line.split(",") for line in lines[1:])
    ]


def write_json(payload, path) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def read_json(path):
    return json.loads(Path(path).read_text())
