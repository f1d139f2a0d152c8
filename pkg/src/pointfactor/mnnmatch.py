"""Iterated mutually-nearest-neighbor matching and descending chains.

Each round matches every pair of active points that are each other's
nearest active neighbor, then removes them; the rounds repeat until
fewer than two points remain.  The globally closest active pair is
always mutual (also under the deterministic tie-break), so every round
makes progress and a finite input terminates with n mod 2 leftovers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import neighbors
from .degeneracy import Degeneracies
from .forest import FactorGraph, Matching
from .pointgen import PointConfiguration


@dataclass
class MnnResult:
    """Outcome of the iterated matching: the matching itself, the round
    each id was matched in, the never-matched leftovers, and the total
    round count."""

    matching: Matching
    round_of_pair: dict[int, int]
    leftover: list[int]
    rounds: int

    def annihilation_time(self, cfg: PointConfiguration, i: int) -> float:
        """Half the matched distance: the meeting time of two balls
        growing at unit rate from the pair's endpoints."""
        j = self.matching.partner[i]
        return cfg.distance(i, j) / 2.0


@dataclass
class ChainReport:
    """Longest descending chain found plus a histogram of step capacities.

    ``histogram[L]`` counts the ordered point pairs whose descending
    continuation capacity is exactly L steps (capacity ignores the
    distinctness of revisited points, so it upper-bounds true chain
    lengths).  ``longest`` and ``length`` are exact over distinct points.
    When the pair set was capped to each point's nearest neighbors, or
    the search budget ran out, ``lower_bound`` is set and the reported
    length is only a lower bound.
    """

    longest: list[int]
    length: int
    histogram: dict[int, int] = field(default_factory=dict)
    lower_bound: bool = False


def mutually_closest_pairs(
    cfg: PointConfiguration,
    active: np.ndarray | None = None,
    degeneracies: Degeneracies | None = None,
) -> list[tuple[int, int]]:
    """All pairs (x, y) of active points with nearest(x) = y and
    nearest(y) = x, in ascending id order.  Pairs are pairwise disjoint
    because nearest() is a function of the point."""
    if active is None:
        active = np.arange(cfg.n, dtype=np.int64)
    else:
        active = np.asarray(active, dtype=np.int64)
    if len(active) < 2:
        return []
    nn_ids, _ = neighbors.nn_info(cfg.window, cfg.points, active, degeneracies)
    pos_of = {int(a): p for p, a in enumerate(active)}
    pairs = []
    for p, a in enumerate(active):
        b = int(nn_ids[p])
        if a < b and int(nn_ids[pos_of[b]]) == int(a):
            pairs.append((int(a), b))
    return pairs


def iterated_mnn_matching(
    cfg: PointConfiguration, degeneracies: Degeneracies | None = None
) -> MnnResult:
    """Match and remove all mutually closest pairs, round after round,
    until fewer than two points remain."""
    n = cfg.n
    active = np.arange(n, dtype=np.int64)
    partner: dict[int, int] = {}
    round_of: dict[int, int] = {}
    rounds = 0
    while len(active) >= 2:
        pairs = mutually_closest_pairs(cfg, active, degeneracies)
        if not pairs:
            raise RuntimeError("no mutual pair among >= 2 active points; loop logic broken")
        rounds += 1
        dropped = set()
        for i, j in pairs:
            partner[i] = j
            partner[j] = i
            round_of[i] = rounds
            round_of[j] = rounds
            dropped.add(i)
            dropped.add(j)
        active = np.array([a for a in active if int(a) not in dropped], dtype=np.int64)
    leftover = [int(a) for a in active]
    if len(leftover) != n % 2:
        raise RuntimeError(f"leftover size {len(leftover)} violates the parity law for n={n}")
    return MnnResult(Matching(n, partner), round_of, leftover, rounds)


def nearest_neighbor_digraph(
    cfg: PointConfiguration,
    subset: np.ndarray | None = None,
    degeneracies: Degeneracies | None = None,
) -> FactorGraph:
    """Directed graph sending every subset point to its closest subset
    point.  A subset smaller than two yields the empty graph."""
    if subset is None:
        subset = np.arange(cfg.n, dtype=np.int64)
    else:
        subset = np.asarray(subset, dtype=np.int64)
    if len(subset) < 2:
        return FactorGraph(cfg.n, [], directed=True)
    nn_ids, _ = neighbors.nn_info(cfg.window, cfg.points, subset, degeneracies)
    edges = [(int(a), int(b)) for a, b in zip(subset, nn_ids)]
    return FactorGraph(cfg.n, edges, directed=True)


def digraph_two_cycles(graph: FactorGraph) -> list[tuple[int, int]]:
    """The 2-cycles of a directed graph, i.e. its mutually closest pairs
    when the graph is a nearest-neighbor digraph."""
    edge_set = set(graph.edges)
    return sorted((u, v) for u, v in edge_set if u < v and (v, u) in edge_set)


def exclusion_region_empty(
    cfg: PointConfiguration, active: np.ndarray, x: int, y: int
) -> bool:
    """Whether no active point other than x, y lies within d(x, y) of
    either endpoint.  This characterizes x, y being mutually closest
    within the active set."""
    key_xy = float(neighbors.pair_keys(cfg.window, cfg.points, [x], [y])[0])
    for z in np.asarray(active, dtype=np.int64):
        z = int(z)
        if z == x or z == y:
            continue
        kx = float(neighbors.pair_keys(cfg.window, cfg.points, [z], [x])[0])
        ky = float(neighbors.pair_keys(cfg.window, cfg.points, [z], [y])[0])
        if kx <= key_xy or ky <= key_xy:
            return False
    return True


# ----------------------------------------------------------------------
# Descending chains
# ----------------------------------------------------------------------

def find_descending_chains(
    cfg: PointConfiguration,
    pair_cap: int | None = 32,
    search_budget: int = 500_000,
) -> ChainReport:
    """Longest sequence of distinct points with strictly decreasing step
    lengths.

    A dynamic program over ordered pairs, processed shortest first, first
    computes each pair's continuation capacity
    ``L(a -> b) = 1 + max L(b -> c)`` over strictly shorter pairs from b.
    Capacities ignore revisits, so they upper-bound true chain lengths; a
    depth-first search over distinct-point chains, pruned by those
    bounds, then finds the exact longest chain.

    With ``pair_cap`` set, each point only offers steps to its pair_cap
    nearest neighbors and the result is flagged as a lower bound; pass
    ``pair_cap=None`` for the exhaustive pair set.  Exhausting
    ``search_budget`` node visits also flags a lower bound.
    """
    n = cfg.n
    if n == 0:
        return ChainReport([], 0)
    if n == 1:
        return ChainReport([0], 0)
    capped = pair_cap is not None and pair_cap < n - 1
    if capped:
        nbr = neighbors.knn_ids(cfg.window, cfg.points, pair_cap)
    else:
        nbr = np.array([[j for j in range(n) if j != i] for i in range(n)], dtype=np.int64)
    src = np.repeat(np.arange(n, dtype=np.int64), nbr.shape[1])
    dst = nbr.ravel()
    keys = neighbors.pair_keys(cfg.window, cfg.points, src, dst)
    order = np.lexsort((dst, src, keys))
    src, dst, keys = src[order], dst[order], keys[order]
    m = len(keys)

    # capacity pass: batches of equal keys keep the "strictly shorter"
    # comparison exact
    best_len = np.zeros(n, dtype=np.int64)
    capacity = np.zeros(m, dtype=np.int64)
    pos = 0
    while pos < m:
        end = pos + 1
        while end < m and keys[end] == keys[pos]:
            end += 1
        capacity[pos:end] = 1 + best_len[dst[pos:end]]
        np.maximum.at(best_len, src[pos:end], capacity[pos:end])
        pos = end

    # per-source extension lists, best capacity first, as plain tuples so
    # the search loop stays cheap
    ext: list[list[tuple[int, float, int]]] = [[] for _ in range(n)]
    by_cap = np.lexsort((dst, -capacity, src))
    for e in by_cap:
        ext[int(src[e])].append((int(capacity[e]), float(keys[e]), int(dst[e])))

    best_chain: list[int] = [int(src[0]), int(dst[0])] if m else []
    best_total = 1 if m else 0
    budget = search_budget
    truncated = False
    max_capacity = int(capacity.max()) if m else 0

    def search(chain: list[int], visited: set[int], bound: float, depth: int) -> None:
        nonlocal best_total, best_chain, budget, truncated
        if budget <= 0:
            truncated = True
            return
        if best_total == max_capacity:
            return
        budget -= 1
        for cap, key, c in ext[chain[-1]]:
            if depth + cap <= best_total:
                break  # sorted by capacity; nothing better follows
            if key >= bound or c in visited:
                continue
            chain.append(c)
            visited.add(c)
            if depth + 1 > best_total:
                best_total = depth + 1
                best_chain = list(chain)
            if best_total == max_capacity:
                chain.pop()
                visited.remove(c)
                return
            search(chain, visited, key, depth + 1)
            visited.remove(c)
            chain.pop()

    start_order = sorted(range(m), key=lambda e: (-int(capacity[e]), int(src[e]), int(dst[e])))
    for e in start_order:
        if int(capacity[e]) <= best_total or best_total == max_capacity or truncated:
            break
        a, b = int(src[e]), int(dst[e])
        search([a, b], {a, b}, float(keys[e]), 1)

    hist: dict[int, int] = {}
    for l in capacity.tolist():
        hist[l] = hist.get(l, 0) + 1
    return ChainReport(best_chain, best_total, hist, lower_bound=capped or truncated)


def longest_descending_chain_exhaustive(cfg: PointConfiguration, max_n: int = 10) -> int:
    """Longest chain by explicit enumeration of distinct-point sequences;
    exponential, so capped at ``max_n`` points.  Used to cross-check the
    bounded search on small instances."""
    n = cfg.n
    if n > max_n:
        raise ValueError(f"exhaustive chain search is limited to n <= {max_n}")
    if n < 2:
        return 0
    keys = {}
    for i in range(n):
        for j in range(n):
            if i != j:
                keys[(i, j)] = float(
                    neighbors.pair_keys(cfg.window, cfg.points, [i], [j])[0]
                )

    def extend(last: int, bound: float, used: frozenset) -> int:
        best = 0
        for nxt in range(n):
            if nxt not in used and keys[(last, nxt)] < bound:
                best = max(best, 1 + extend(nxt, keys[(last, nxt)], used | {nxt}))
        return best

    best = 0
    for a in range(n):
        for b in range(n):
            if a != b:
                best = max(best, 1 + extend(b, keys[(a, b)], frozenset({a, b})))
    return best
