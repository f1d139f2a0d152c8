"""Verifiers, the mass-transport balance identity, and edge-length tails.

The transport rules are equivariant unit-mass assignments; on a torus
the total mass sent equals the total mass received exactly, because both
totals sum the same finite multiset of unit masses in two groupings.
The per-cell table exists for inspecting spatial fluctuations only.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import forest, mnnmatch, neighbors
from .clumping import ClumpHierarchy, build_hierarchy
from .degeneracy import Degeneracies
from .forest import FactorGraph, Matching
from .metric import TORUS
from .pointgen import PointConfiguration

TRANSPORT_RULES = (
    "to-nearest-neighbor",
    "to-matched-partner",
    "along-dfs-successor",
    "to-unmatched-in-component",
)


@dataclass
class GraphReport:
    connected: bool
    acyclic: bool
    component_count: int
    degree_histogram: dict[int, int]
    max_degree: int

    @property
    def is_tree(self) -> bool:
        return self.connected and self.acyclic


@dataclass
class MatchingReport:
    perfect_up_to_parity: bool
    unmatched: int


@dataclass
class TransportBalance:
    total_out: float
    total_in: float
    per_cell: list[dict] = field(default_factory=list)


def verify_graph(graph: FactorGraph) -> GraphReport:
    """Connectivity, acyclicity, and the degree histogram of a graph."""
    n = graph.n
    for u, v in graph.edges:
        if not (0 <= u < n and 0 <= v < n) or u == v:
            raise ValueError(f"malformed edge ({u}, {v})")
    degree = [0] * n
    adj: list[list[int]] = [[] for _ in range(n)]
    for u, v in graph.edges:
        degree[u] += 1
        degree[v] += 1
        adj[u].append(v)
        adj[v].append(u)
    components = 0
    seen = [False] * n
    for s in range(n):
        if seen[s]:
            continue
        components += 1
        stack = [s]
        seen[s] = True
        while stack:
            x = stack.pop()
            for y in adj[x]:
                if not seen[y]:
                    seen[y] = True
                    stack.append(y)
    if graph.directed:
        acyclic = _directed_acyclic(graph)
    else:
        acyclic = len(graph.edges) == n - components
    hist: dict[int, int] = {}
    for d in degree:
        hist[d] = hist.get(d, 0) + 1
    return GraphReport(
        connected=components <= 1,
        acyclic=acyclic,
        component_count=components,
        degree_histogram=hist,
        max_degree=max(degree) if degree else 0,
    )


def _directed_acyclic(graph: FactorGraph) -> bool:
    out: list[list[int]] = [[] for _ in range(graph.n)]
    for u, v in graph.edges:
        out[u].append(v)
    color = [0] * graph.n  # 0 unseen, 1 on stack, 2 done
    for s in range(graph.n):
        if color[s]:
            continue
        stack = [(s, iter(out[s]))]
        color[s] = 1
        while stack:
            v, it = stack[-1]
            advanced = False
            for w in it:
                if color[w] == 1:
                    return False
                if color[w] == 0:
                    color[w] = 1
                    stack.append((w, iter(out[w])))
                    advanced = True
                    break
            if not advanced:
                color[v] = 2
                stack.pop()
    return True


def verify_matching(matching: Matching, n: int) -> MatchingReport:
    """Symmetry and parity check of a partner map."""
    for i, j in matching.partner.items():
        if not (0 <= i < n and 0 <= j < n):
            raise ValueError(f"partner entry ({i}, {j}) out of range")
        if i == j:
            raise ValueError(f"self-match at {i}")
        if matching.partner.get(j) != i:
            raise ValueError(f"asymmetric partner map at ({i}, {j})")
    unmatched = n - len(matching.partner)
    return MatchingReport(perfect_up_to_parity=unmatched == n % 2, unmatched=unmatched)


def _transport_edges(
    cfg: PointConfiguration,
    transport: str,
    hierarchy: ClumpHierarchy | None,
    degeneracies: Degeneracies | None,
) -> list[tuple[int, int]]:
    n = cfg.n
    if transport == "to-nearest-neighbor":
        if n < 2:
            return []
        nn_ids, _ = neighbors.nn_info(cfg.window, cfg.points, degeneracies=degeneracies)
        return [(i, int(nn_ids[i])) for i in range(n)]
    if transport == "to-matched-partner":
        result = mnnmatch.iterated_mnn_matching(cfg, degeneracies)
        return [(i, j) for i, j in result.matching.partner.items()]
    if hierarchy is None:
        hierarchy = build_hierarchy(cfg, degeneracies=degeneracies)
    if transport == "along-dfs-successor":
        if n == 0:
            return []
        tree, roots = forest.build_one_ended_tree(
            cfg, hierarchy, degeneracies=degeneracies, return_roots=True
        )
        order = forest.dfs_order(tree, cfg, roots[0], degeneracies)
        return [(order[i], order[i + 1]) for i in range(len(order) - 1)]
    if transport == "to-unmatched-in-component":
        matching = forest.clump_greedy_matching(cfg, hierarchy, degeneracies)
        top = hierarchy.labels[hierarchy.k_max]
        edges = []
        for y in matching.unmatched():
            for x in range(n):
                if x != y and top[x] == top[y]:
                    edges.append((x, y))
        return edges
    raise ValueError(f"unknown transport rule {transport!r}")


def mass_transport_balance(
    cfg: PointConfiguration,
    transport: str,
    cells_per_axis: int = 4,
    hierarchy: ClumpHierarchy | None = None,
    degeneracies: Degeneracies | None = None,
) -> TransportBalance:
    """Total unit mass sent versus received for a named transport rule,
    plus a per-cell breakdown over a grid of congruent torus cells.

    Only torus windows are accepted: the identity being exercised is a
    rearrangement of a translation-invariant sum, and the torus is the
    finite window that keeps translation invariance intact.
    """
    if cfg.window.kind != TORUS:
        raise ValueError(
            "mass transport balance requires a torus window; box and disk "
            "windows lose the translation invariance the identity relies on"
        )
    if transport not in TRANSPORT_RULES:
        raise ValueError(f"unknown transport rule {transport!r}; choose from {TRANSPORT_RULES}")
    if cells_per_axis < 1:
        raise ValueError("cells_per_axis must be positive")
    edges = _transport_edges(cfg, transport, hierarchy, degeneracies)
    n = cfg.n
    out_mass = np.zeros(n)
    in_mass = np.zeros(n)
    for x, y in edges:
        out_mass[x] += 1.0
        in_mass[y] += 1.0
    cell_width = cfg.window.extent / cells_per_axis
    cell_of = np.minimum(
        np.floor(cfg.points / cell_width).astype(int), cells_per_axis - 1
    )
    cell_out: dict[tuple, float] = {}
    cell_in: dict[tuple, float] = {}
    for i in range(n):
        c = tuple(int(v) for v in cell_of[i])
        cell_out[c] = cell_out.get(c, 0.0) + out_mass[i]
        cell_in[c] = cell_in.get(c, 0.0) + in_mass[i]
    per_cell = []
    for c in sorted(set(cell_out) | set(cell_in)):
        per_cell.append(
            {"cell": list(c), "out": cell_out.get(c, 0.0), "in": cell_in.get(c, 0.0)}
        )
    return TransportBalance(
        total_out=float(out_mass.sum()), total_in=float(in_mass.sum()), per_cell=per_cell
    )


def edge_length_tail(
    obj, cfg: PointConfiguration, radii
) -> list[tuple[float, float]]:
    """Survival curve of per-point incident edge lengths.

    For each radius r, the fraction of points incident to an edge longer
    than r.  Accepts a FactorGraph or a Matching; isolated points never
    exceed any radius, so the value at r = 0 is the matched (or
    edge-incident) fraction.
    """
    radii = [float(r) for r in radii]
    if any(b < a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be sorted ascending")
    if isinstance(obj, Matching):
        edges = obj.pairs()
        n = obj.n
    else:
        edges = obj.edges
        n = obj.n
    longest = np.zeros(n)
    if edges:
        ii = np.array([e[0] for e in edges])
        jj = np.array([e[1] for e in edges])
        lengths = neighbors.pair_distances(cfg.window, cfg.points, ii, jj)
        for (u, v), length in zip(edges, lengths):
            longest[u] = max(longest[u], length)
            longest[v] = max(longest[v], length)
    out = []
    for r in radii:
        frac = float(np.count_nonzero(longest > r)) / n if n else 0.0
        out.append((r, frac))
    return out
