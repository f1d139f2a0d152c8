"""Factor graphs over point configurations: leader-election trees, DFS
orderings, minimal spanning forests, and the clump-cascade greedy
matching.

All constructions are deterministic functions of the configuration (and
hierarchy, where one is used).  Exact distance ties fall back to the
global rule of preferring the lexicographically smallest sorted id pair
and are counted in the supplied :class:`Degeneracies`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import neighbors
from .clumping import ClumpHierarchy
from .degeneracy import Degeneracies
from .metric import DISK
from .pointgen import PointConfiguration

# Above this size the MST switches from sorting all pairs to a
# radius-doubling candidate search on a spatial index.
MST_ALL_PAIRS_LIMIT = 5000

# Greedy matching precomputes a key matrix for clumps up to this size and
# falls back to repeated closest-pair queries beyond it.
_GREEDY_MATRIX_LIMIT = 1500


@dataclass
class FactorGraph:
    """Edge list over point ids 0..n-1.

    Undirected graphs store each edge once with the smaller id first.
    """

    n: int
    edges: list[tuple[int, int]]
    directed: bool = False

    def __post_init__(self) -> None:
        normalized = []
        seen = set()
        for u, v in self.edges:
            u, v = int(u), int(v)
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"edge ({u}, {v}) out of range for n={self.n}")
            if u == v:
                raise ValueError(f"self-loop at {u}")
            if not self.directed and u > v:
                u, v = v, u
            if (u, v) in seen:
                raise ValueError(f"duplicate edge ({u}, {v})")
            seen.add((u, v))
            normalized.append((u, v))
        self.edges = normalized

    def adjacency(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.n)]
        for u, v in self.edges:
            adj[u].append(v)
            if not self.directed:
                adj[v].append(u)
        return adj


@dataclass
class Matching:
    """Partial matching as a symmetric partner map; ids absent from the
    map are unmatched."""

    n: int
    partner: dict[int, int] = field(default_factory=dict)

    def pairs(self) -> list[tuple[int, int]]:
        return sorted((i, j) for i, j in self.partner.items() if i < j)

    def unmatched(self) -> list[int]:
        return [i for i in range(self.n) if i not in self.partner]

    def to_graph(self) -> FactorGraph:
        return FactorGraph(self.n, self.pairs())


class UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))
        self.rank = [0] * n
        self.components = n

    def find(self, x: int) -> int:
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, x: int, y: int) -> bool:
        rx, ry = self.find(x), self.find(y)
        if rx == ry:
            return False
        if self.rank[rx] < self.rank[ry]:
            rx, ry = ry, rx
        self.parent[ry] = rx
        if self.rank[rx] == self.rank[ry]:
            self.rank[rx] += 1
        self.components -= 1
        return True


# ----------------------------------------------------------------------
# Leader election and the hierarchy tree
# ----------------------------------------------------------------------

def elect_leader(
    cfg: PointConfiguration,
    members,
    pool: str = "full",
    degeneracies: Degeneracies | None = None,
) -> int:
    """Distinguished member of a clump.

    A singleton elects its element.  Otherwise the minimum-distance pair
    within the members is found, and of those two points the one closer
    to its nearest point outside the pair wins.  ``pool`` selects where
    that third point may come from: the full configuration ("full") or
    the member set itself ("members").  With no third point available the
    smaller id wins and the fallback is counted.
    """
    members = sorted(int(m) for m in members)
    if not members:
        raise ValueError("members must be nonempty")
    if len(members) == 1:
        return members[0]
    if pool not in ("full", "members"):
        raise ValueError("pool must be 'full' or 'members'")
    x1, x2, _ = neighbors.closest_pair(
        cfg.window, cfg.points, np.array(members), degeneracies
    )
    if pool == "full":
        pool_ids = [i for i in range(cfg.n) if i != x1 and i != x2]
    else:
        pool_ids = [i for i in members if i != x1 and i != x2]
    if not pool_ids:
        if degeneracies is not None:
            degeneracies.leader_fallbacks += 1
        return min(x1, x2)
    pool_pts = cfg.points[np.array(pool_ids)]
    k1 = cfg.window.distance_key_matrix(cfg.points[x1 : x1 + 1], pool_pts).min()
    k2 = cfg.window.distance_key_matrix(cfg.points[x2 : x2 + 1], pool_pts).min()
    if k1 == k2:
        if degeneracies is not None:
            degeneracies.distance_ties += 1
        return min(x1, x2)
    return x1 if k1 < k2 else x2


def build_one_ended_tree(
    cfg: PointConfiguration,
    hierarchy: ClumpHierarchy,
    pool: str = "full",
    degeneracies: Degeneracies | None = None,
    return_roots: bool = False,
):
    """Leader-election tree over the clump hierarchy.

    Level 1 stars every clump on its leader; each higher level elects a
    leader among the leaders of its constituent clumps and stars those.
    With a single top clump the result is a spanning tree with n-1 edges;
    otherwise each top clump contributes its own tree component and its
    leader is reported as a root.
    """
    n = cfg.n
    edges: list[tuple[int, int]] = []
    if n == 0:
        graph = FactorGraph(0, [])
        return (graph, []) if return_roots else graph
    leaders: dict[int, int] = {}
    for label, clump in enumerate(hierarchy.partition(1)):
        lead = elect_leader(cfg, clump, pool, degeneracies)
        leaders[label] = lead
        edges.extend((lead, other) for other in clump if other != lead)
    for k in range(2, hierarchy.k_max + 1):
        lab_k = hierarchy.labels[k]
        grouped: dict[int, list[int]] = {}
        for lead in leaders.values():
            grouped.setdefault(int(lab_k[lead]), []).append(lead)
        leaders = {}
        for label in sorted(grouped):
            group = sorted(grouped[label])
            lead = elect_leader(cfg, group, pool, degeneracies)
            leaders[label] = lead
            edges.extend((lead, y) for y in group if y != lead)
    graph = FactorGraph(n, edges)
    roots = sorted(leaders.values())
    return (graph, roots) if return_roots else graph


def dfs_order(
    tree: FactorGraph,
    cfg: PointConfiguration,
    root: int,
    degeneracies: Degeneracies | None = None,
) -> list[int]:
    """Depth-first visit order with children taken in ascending distance
    to their parent (ties by ascending id).

    If the graph is disconnected, the remaining components are traversed
    from their smallest id in ascending order, and each extra component
    is counted as a degeneracy.
    """
    n = tree.n
    if not 0 <= root < n:
        raise ValueError("root out of range")
    adj = tree.adjacency()
    visited = [False] * n
    order: list[int] = []

    def traverse(start: int) -> None:
        stack = [(start, -1)]
        while stack:
            v, parent = stack.pop()
            if visited[v]:
                continue
            visited[v] = True
            order.append(v)
            children = [u for u in adj[v] if u != parent and not visited[u]]
            if not children:
                continue
            keys = neighbors.pair_keys(
                cfg.window, cfg.points, np.full(len(children), v), np.array(children)
            )
            if degeneracies is not None and len(np.unique(keys)) < len(keys):
                degeneracies.distance_ties += len(keys) - len(np.unique(keys))
            ranked = sorted(zip(keys.tolist(), children))
            for _, child in reversed(ranked):
                stack.append((child, v))

    traverse(root)
    while len(order) < n:
        extra = next(i for i in range(n) if not visited[i])
        if degeneracies is not None:
            degeneracies.dfs_extra_components += 1
        traverse(extra)
    return order


def ordering_path_graph(order: list[int], n: int) -> FactorGraph:
    """Directed path through consecutive entries of an ordering."""
    edges = [(order[i], order[i + 1]) for i in range(len(order) - 1)]
    return FactorGraph(n, edges, directed=True)


# ----------------------------------------------------------------------
# Minimal spanning forest
# ----------------------------------------------------------------------

def _kruskal(
    n: int,
    ii: np.ndarray,
    jj: np.ndarray,
    keys: np.ndarray,
    degeneracies: Degeneracies | None,
) -> tuple[list[tuple[int, int]], UnionFind]:
    # stable sort on keys keeps equal-length edges in lexicographic pair
    # order, which is exactly the global tie-break
    order = np.argsort(keys, kind="stable")
    if degeneracies is not None and len(keys):
        ks = keys[order]
        degeneracies.distance_ties += int(np.count_nonzero(ks[1:] == ks[:-1]))
    uf = UnionFind(n)
    edges: list[tuple[int, int]] = []
    for e in order:
        u, v = int(ii[e]), int(jj[e])
        if uf.union(u, v):
            edges.append((u, v))
            if len(edges) == n - 1:
                break
    return edges, uf


def minimal_spanning_forest(
    cfg: PointConfiguration,
    degeneracies: Degeneracies | None = None,
    all_pairs: bool | None = None,
) -> FactorGraph:
    """Minimum spanning tree of the complete distance graph.

    Equivalently: delete from the complete graph every edge that is the
    longest in some cycle.  Unique when the configuration is
    non-equidistant; exact ties are ordered by the global tie-break and
    counted.  Small inputs sort all pairs; large flat inputs gather
    candidate edges from a spatial index with a doubling radius.
    """
    n = cfg.n
    if n <= 1:
        return FactorGraph(n, [])
    if all_pairs is None:
        all_pairs = n <= MST_ALL_PAIRS_LIMIT or cfg.window.kind == DISK
    if all_pairs:
        ii, jj = np.triu_indices(n, k=1)
        keys = neighbors.condensed_keys(cfg.window, cfg.points)
        edges, _ = _kruskal(n, ii, jj, keys, degeneracies)
        return FactorGraph(n, edges)
    if cfg.window.kind == DISK:
        raise ValueError("the indexed candidate route supports flat windows only")
    tree = neighbors._tree(cfg.window, cfg.points)
    radius = 2.0 * (cfg.window.volume() / n) ** (1.0 / cfg.window.dimension)
    max_radius = cfg.window.diameter()
    while True:
        pairs = tree.query_pairs(min(radius, max_radius), output_type="ndarray")
        if len(pairs):
            keys = neighbors.pair_keys(cfg.window, cfg.points, pairs[:, 0], pairs[:, 1])
            edges, uf = _kruskal(n, pairs[:, 0], pairs[:, 1], keys, degeneracies)
            if uf.components == 1:
                return FactorGraph(n, edges)
        if radius > max_radius:
            # degenerate fallback; only reachable on pathological inputs
            return minimal_spanning_forest(cfg, degeneracies, all_pairs=True)
        radius *= 2.0


def msf_cycle_oracle(
    cfg: PointConfiguration, degeneracies: Degeneracies | None = None
) -> FactorGraph:
    """Direct cycle-deletion construction for cross-checks.

    Keeps edge (x, y) exactly when no path joins x and y using only edges
    that come strictly earlier in the (length, pair) order; such an edge
    would be the longest in the cycle it closes.  Exponential in spirit,
    so inputs are capped at 12 points.
    """
    n = cfg.n
    if n > 12:
        raise ValueError("cycle oracle is limited to n <= 12")
    if n <= 1:
        return FactorGraph(n, [])
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    keys = neighbors.condensed_keys(cfg.window, cfg.points)
    if degeneracies is not None:
        degeneracies.distance_ties += len(keys) - len(np.unique(keys))
    ranked = sorted(zip(keys.tolist(), pairs))
    kept: list[tuple[int, int]] = []
    for rank, (_, (u, v)) in enumerate(ranked):
        adj: dict[int, list[int]] = {i: [] for i in range(n)}
        for _, (a, b) in ranked[:rank]:
            adj[a].append(b)
            adj[b].append(a)
        stack = [u]
        seen = {u}
        reachable = False
        while stack:
            x = stack.pop()
            if x == v:
                reachable = True
                break
            for y in adj[x]:
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        if not reachable:
            kept.append((u, v))
    return FactorGraph(n, kept)


# ----------------------------------------------------------------------
# Clump-cascade greedy matching
# ----------------------------------------------------------------------

def _greedy_match_within(
    cfg: PointConfiguration,
    active: list[int],
    partner: dict[int, int],
    degeneracies: Degeneracies | None,
) -> None:
    """Repeatedly match and remove the closest active pair until at most
    one point remains, writing into ``partner``."""
    window = cfg.window
    if len(active) <= _GREEDY_MATRIX_LIMIT:
        ids = np.array(active, dtype=np.int64)
        keys = window.distance_key_matrix(cfg.points[ids], cfg.points[ids])
        np.fill_diagonal(keys, np.inf)
        alive = len(ids)
        while alive >= 2:
            flat = int(keys.argmin())
            a, b = divmod(flat, len(ids))
            best = keys[a, b]
            if degeneracies is not None:
                hits = np.argwhere(keys == best)
                distinct = {(min(int(p), int(q)), max(int(p), int(q))) for p, q in hits}
                if len(distinct) > 1:
                    degeneracies.distance_ties += len(distinct) - 1
                    a, b = min(distinct)
            i, j = int(ids[a]), int(ids[b])
            partner[i] = j
            partner[j] = i
            keys[a, :] = np.inf
            keys[:, a] = np.inf
            keys[b, :] = np.inf
            keys[:, b] = np.inf
            alive -= 2
        return
    remaining = list(active)
    while len(remaining) >= 2:
        i, j, _ = neighbors.closest_pair(window, cfg.points, np.array(remaining), degeneracies)
        partner[i] = j
        partner[j] = i
        remaining = [x for x in remaining if x != i and x != j]


def clump_greedy_matching(
    cfg: PointConfiguration,
    hierarchy: ClumpHierarchy,
    degeneracies: Degeneracies | None = None,
    return_levels: bool = False,
):
    """Level-cascade greedy matching.

    Within every level-1 clump the closest unmatched pair is matched and
    removed until at most one point is left; each higher level then
    matches the leftovers of its constituent clumps the same way.  With a
    single top clump exactly n mod 2 points end up unmatched.
    """
    partner: dict[int, int] = {}
    level_of: dict[int, int] = {}
    for k in range(1, hierarchy.k_max + 1):
        for clump in hierarchy.partition(k):
            active = [i for i in clump if i not in partner]
            before = set(active)
            _greedy_match_within(cfg, active, partner, degeneracies)
            for i in before:
                if i in partner and i not in level_of:
                    level_of[i] = k
    matching = Matching(cfg.n, partner)
    return (matching, level_of) if return_levels else matching
