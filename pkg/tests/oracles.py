"""Independent reference implementations used only by the test suite.

Everything here is written with plain scalar loops against
``window.distance`` so that the fast vectorized code paths are checked
against genuinely separate logic.
"""

from __future__ import annotations


def closest_pair_oracle(cfg, members):
    best = None
    for ai, a in enumerate(members):
        for b in members[ai + 1 :]:
            d = cfg.window.distance(cfg.points[a], cfg.points[b])
            key = (d, min(a, b), max(a, b))
            if best is None or key < best:
                best = key
    return best[1], best[2]


def leader_oracle(cfg, members, pool="full"):
    members = sorted(members)
    if len(members) == 1:
        return members[0]
    x1, x2 = closest_pair_oracle(cfg, members)
    if pool == "full":
        candidates = [i for i in range(cfg.n) if i not in (x1, x2)]
    else:
        candidates = [i for i in members if i not in (x1, x2)]
    if not candidates:
        return min(x1, x2)
    d1 = min(cfg.window.distance(cfg.points[x1], cfg.points[c]) for c in candidates)
    d2 = min(cfg.window.distance(cfg.points[x2], cfg.points[c]) for c in candidates)
    if d1 == d2:
        return min(x1, x2)
    return x1 if d1 < d2 else x2


def tree_oracle(cfg, hierarchy, pool="full"):
    """Per-level leader stars, written as direct loops over partitions."""
    edges = set()
    leaders = {}
    for label, clump in enumerate(hierarchy.partition(1)):
        lead = leader_oracle(cfg, clump, pool)
        leaders[label] = lead
        for other in clump:
            if other != lead:
                edges.add((min(lead, other), max(lead, other)))
    for k in range(2, hierarchy.k_max + 1):
        lab = hierarchy.labels[k]
        groups = {}
        for lead in leaders.values():
            groups.setdefault(int(lab[lead]), []).append(lead)
        leaders = {}
        for label in sorted(groups):
            group = sorted(groups[label])
            lead = leader_oracle(cfg, group, pool)
            leaders[label] = lead
            for y in group:
                if y != lead:
                    edges.add((min(lead, y), max(lead, y)))
    return edges, sorted(leaders.values())


def dfs_oracle(tree, cfg, root):
    """Recursive depth-first order, children by (distance to parent, id)."""
    adj = {i: [] for i in range(tree.n)}
    for u, v in tree.edges:
        adj[u].append(v)
        adj[v].append(u)
    order = []
    seen = set()

    def visit(v, parent):
        seen.add(v)
        order.append(v)
        children = [u for u in adj[v] if u != parent and u not in seen]
        children.sort(key=lambda u: (cfg.window.distance(cfg.points[v], cfg.points[u]), u))
        for u in children:
            if u not in seen:
                visit(u, v)

    visit(root, -1)
    while len(order) < tree.n:
        nxt = min(i for i in range(tree.n) if i not in seen)
        visit(nxt, -1)
    return order


def mnn_resimulate(cfg):
    """Round-by-round mutual-nearest matching with scalar loops.

    Returns (pairs_by_round, leftover, per_round_min_distance).
    """
    active = list(range(cfg.n))
    rounds = []
    round_mins = []

    def dist(i, j):
        return cfg.window.distance(cfg.points[i], cfg.points[j])

    while len(active) >= 2:
        nearest = {}
        for i in active:
            best = None
            for j in active:
                if j == i:
                    continue
                key = (dist(i, j), j)
                if best is None or key < best:
                    best = key
            nearest[i] = best[1]
        pairs = sorted(
            (i, nearest[i])
            for i in active
            if i < nearest[i] and nearest[nearest[i]] == i
        )
        if not pairs:
            raise AssertionError("re-simulation stalled")
        round_mins.append(min(dist(i, j) for i in active for j in active if i < j))
        rounds.append(pairs)
        matched = {x for p in pairs for x in p}
        active = [i for i in active if i not in matched]
    return rounds, active, round_mins


def greedy_match_oracle(cfg, hierarchy):
    """Clump-cascade greedy matching with scalar loops."""
    partner = {}
    for k in range(1, hierarchy.k_max + 1):
        for clump in hierarchy.partition(k):
            active = [i for i in clump if i not in partner]
            while len(active) >= 2:
                i, j = closest_pair_oracle(cfg, active)
                partner[i] = j
                partner[j] = i
                active = [x for x in active if x not in (i, j)]
    return partner
