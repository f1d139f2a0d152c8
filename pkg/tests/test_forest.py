import numpy as np
import pytest

from pointfactor import (
    BOX,
    DISK,
    TORUS,
    ClumpingParams,
    Degeneracies,
    FactorGraph,
    MetricWindow,
    PointConfiguration,
    build_hierarchy,
    build_one_ended_tree,
    clump_greedy_matching,
    derive_seeds,
    dfs_order,
    elect_leader,
    minimal_spanning_forest,
    msf_cycle_oracle,
    sample_poisson,
    verify_graph,
    verify_matching,
)
from pointfactor.clumping import ClumpHierarchy
from pointfactor.forest import clump_greedy_matching as greedy_with_levels
from pointfactor.forest import ordering_path_graph

from oracles import dfs_oracle, greedy_match_oracle, leader_oracle, tree_oracle


def hand_hierarchy(n, levels, dimension=1):
    labels = {k: np.array(lab, dtype=np.int64) for k, lab in levels.items()}
    k_max = max(levels)
    return ClumpHierarchy(
        n=n,
        k_max=k_max,
        labels=labels,
        cutters={k: () for k in levels},
        dropped_levels=(),
        params=ClumpingParams(dimension, k_max),
    )


def test_factor_graph_validation():
    FactorGraph(3, [(2, 0)])
    with pytest.raises(ValueError):
        FactorGraph(2, [(0, 2)])
    with pytest.raises(ValueError):
        FactorGraph(2, [(1, 1)])
    with pytest.raises(ValueError):
        FactorGraph(3, [(0, 1), (1, 0)])
    g = FactorGraph(3, [(2, 1)])
    assert g.edges == [(1, 2)]


def test_leader_singleton():
    cfg = PointConfiguration(MetricWindow(BOX, 1, 10.0), [[1.0], [2.0]])
    assert elect_leader(cfg, [1]) == 1


def test_leader_collinear_example():
    # closest pair (0, 1); third-point distances 5 vs 4, so 1 leads
    cfg = PointConfiguration(MetricWindow(BOX, 1, 10.0), [[0.0], [1.0], [5.0]])
    assert elect_leader(cfg, [0, 1, 2]) == 1
    assert leader_oracle(cfg, [0, 1, 2]) == 1


def test_leader_two_point_fallback():
    deg = Degeneracies()
    cfg = PointConfiguration(MetricWindow(BOX, 1, 10.0), [[0.0], [1.0]])
    assert elect_leader(cfg, [0, 1], degeneracies=deg) == 0
    assert deg.leader_fallbacks == 1


def test_leader_matches_oracle_on_random_clumps():
    w = MetricWindow(TORUS, 2, 10.0)
    rng = np.random.default_rng(3)
    for s in derive_seeds(91, 20):
        cfg = sample_poisson(w, 0.8, s)
        if cfg.n < 3:
            continue
        size = int(rng.integers(2, cfg.n + 1))
        members = sorted(rng.choice(cfg.n, size=size, replace=False).tolist())
        for pool in ("full", "members"):
            assert elect_leader(cfg, members, pool) == leader_oracle(cfg, members, pool)


def test_tree_single_level_star():
    cfg = PointConfiguration(MetricWindow(BOX, 1, 10.0), [[0.0], [1.0], [5.0]])
    h = hand_hierarchy(3, {1: [0, 0, 0]})
    tree = build_one_ended_tree(cfg, h)
    assert sorted(tree.edges) == [(0, 1), (1, 2)]


def test_tree_two_level_hand_hierarchy():
    # two level-1 clumps merging at level 2, checked against the
    # independent recursive construction
    w = MetricWindow(BOX, 1, 100.0)
    cfg = PointConfiguration(w, [[0.0], [1.0], [3.0], [50.0], [51.5]])
    h = hand_hierarchy(5, {1: [0, 0, 0, 1, 1], 2: [0, 0, 0, 0, 0]})
    tree, roots = build_one_ended_tree(cfg, h, return_roots=True)
    oracle_edges, oracle_roots = tree_oracle(cfg, h)
    assert set(tree.edges) == oracle_edges
    assert roots == oracle_roots
    report = verify_graph(tree)
    assert report.is_tree and len(tree.edges) == 4


def test_tree_matches_oracle_on_poisson_runs():
    w = MetricWindow(TORUS, 2, 8.0)
    for s in derive_seeds(17, 15):
        cfg = sample_poisson(w, 1.0, s)
        if cfg.n == 0:
            continue
        h = build_hierarchy(cfg)
        tree, roots = build_one_ended_tree(cfg, h, return_roots=True)
        oracle_edges, oracle_roots = tree_oracle(cfg, h)
        assert set(tree.edges) == oracle_edges
        assert roots == oracle_roots


def test_tree_is_spanning_tree_with_single_top_clump():
    w = MetricWindow(TORUS, 2, 12.0)
    for s in derive_seeds(23, 10):
        cfg = sample_poisson(w, 1.0, s)
        h = build_hierarchy(cfg)
        assert h.top_is_single_clump()
        tree = build_one_ended_tree(cfg, h)
        report = verify_graph(tree)
        assert report.is_tree
        assert len(tree.edges) == cfg.n - 1


def test_empty_configuration_tree():
    w = MetricWindow(BOX, 2, 10.0)
    cfg = PointConfiguration(w, np.empty((0, 2)))
    h = build_hierarchy(cfg)
    tree = build_one_ended_tree(cfg, h)
    assert tree.n == 0 and tree.edges == []


def test_dfs_star_visits_children_by_distance():
    w = MetricWindow(BOX, 1, 10.0)
    cfg = PointConfiguration(w, [[5.0], [8.0], [6.0], [3.0]])  # center 0; dists 3,1,2
    tree = FactorGraph(4, [(0, 1), (0, 2), (0, 3)])
    assert dfs_order(tree, cfg, 0) == [0, 2, 3, 1]


def test_dfs_path():
    w = MetricWindow(BOX, 1, 10.0)
    cfg = PointConfiguration(w, [[0.0], [1.0], [2.0]])
    tree = FactorGraph(3, [(0, 1), (1, 2)])
    assert dfs_order(tree, cfg, 0) == [0, 1, 2]


def test_dfs_matches_recursive_oracle():
    w = MetricWindow(TORUS, 2, 8.0)
    for s in derive_seeds(29, 10):
        cfg = sample_poisson(w, 1.0, s)
        if cfg.n == 0:
            continue
        h = build_hierarchy(cfg)
        tree, roots = build_one_ended_tree(cfg, h, return_roots=True)
        order = dfs_order(tree, cfg, roots[0])
        assert order == dfs_oracle(tree, cfg, roots[0])
        assert sorted(order) == list(range(cfg.n))
        path = ordering_path_graph(order, cfg.n)
        assert verify_graph(path).max_degree <= 2


def test_dfs_disconnected_is_flagged():
    w = MetricWindow(BOX, 1, 10.0)
    cfg = PointConfiguration(w, [[0.0], [1.0], [5.0], [6.0]])
    g = FactorGraph(4, [(0, 1), (2, 3)])
    deg = Degeneracies()
    order = dfs_order(g, cfg, 0, degeneracies=deg)
    assert order == [0, 1, 2, 3]
    assert deg.dfs_extra_components == 1


def test_mst_triangle_345():
    cfg = PointConfiguration(MetricWindow(BOX, 2, 10.0), [[0, 0], [3, 0], [3, 4]])
    assert minimal_spanning_forest(cfg).edges == [(0, 1), (1, 2)]
    assert msf_cycle_oracle(cfg).edges == [(0, 1), (1, 2)]


def test_mst_collinear():
    cfg = PointConfiguration(MetricWindow(BOX, 1, 10.0), [[0.0], [1.0], [3.0]])
    assert minimal_spanning_forest(cfg).edges == [(0, 1), (1, 2)]


def test_mst_two_points_and_empty():
    w = MetricWindow(BOX, 1, 10.0)
    assert msf_cycle_oracle(PointConfiguration(w, [[0.0], [4.0]])).edges == [(0, 1)]
    assert minimal_spanning_forest(PointConfiguration(w, np.empty((0, 1)))).edges == []


def test_mst_equals_cycle_oracle_on_random_instances():
    kinds = [
        MetricWindow(BOX, 2, 10.0),
        MetricWindow(TORUS, 2, 10.0),
        MetricWindow(BOX, 1, 10.0),
        MetricWindow(TORUS, 3, 8.0),
        MetricWindow(DISK, 2, 2.0),
    ]
    rng = np.random.default_rng(5)
    for t, s in enumerate(derive_seeds(61, 60)):
        w = kinds[t % len(kinds)]
        n = int(rng.integers(2, 10))
        local = np.random.default_rng(s)
        cfg = PointConfiguration(w, w.sample_uniform(local, n))
        assert sorted(minimal_spanning_forest(cfg).edges) == sorted(
            msf_cycle_oracle(cfg).edges
        )


def test_mst_tie_handling_square():
    deg = Degeneracies()
    cfg = PointConfiguration(
        MetricWindow(BOX, 2, 2.0), [[0, 0], [1, 0], [0, 1], [1, 1]]
    )
    mst = minimal_spanning_forest(cfg, degeneracies=deg)
    oracle = msf_cycle_oracle(cfg)
    assert sorted(mst.edges) == sorted(oracle.edges)
    assert deg.distance_ties > 0
    assert len(mst.edges) == 3


def test_mst_oracle_refuses_large_input():
    w = MetricWindow(BOX, 2, 10.0)
    rng = np.random.default_rng(0)
    cfg = PointConfiguration(w, w.sample_uniform(rng, 13))
    with pytest.raises(ValueError):
        msf_cycle_oracle(cfg)


def test_mst_indexed_route_matches_all_pairs():
    w = MetricWindow(TORUS, 2, 45.0)
    cfg = sample_poisson(w, 1.0, 99)
    assert cfg.n > 1500
    full = minimal_spanning_forest(cfg, all_pairs=True)
    indexed = minimal_spanning_forest(cfg, all_pairs=False)
    assert sorted(full.edges) == sorted(indexed.edges)


def test_clump_greedy_single_clump():
    cfg = PointConfiguration(MetricWindow(BOX, 1, 10.0), [[0.0], [1.0], [5.0]])
    h = hand_hierarchy(3, {1: [0, 0, 0]})
    m = clump_greedy_matching(cfg, h)
    assert m.partner == {0: 1, 1: 0}
    assert m.unmatched() == [2]


def test_clump_greedy_two_clumps_merge():
    w = MetricWindow(BOX, 1, 100.0)
    cfg = PointConfiguration(
        w, [[0.0], [0.4], [1.0], [50.0], [50.3], [51.0]]
    )
    h = hand_hierarchy(6, {1: [0, 0, 0, 1, 1, 1], 2: [0] * 6})
    m, level_of = greedy_with_levels(cfg, h, return_levels=True)
    assert verify_matching(m, 6).perfect_up_to_parity
    # exactly the two level-1 leftovers pair up at level 2
    level2_ids = [i for i, k in level_of.items() if k == 2]
    assert len(level2_ids) == 2
    assert m.partner[level2_ids[0]] == level2_ids[1]
    assert m.partner == {
        i: j for i, j in greedy_match_oracle(cfg, h).items()
    }


def test_clump_greedy_matches_oracle_and_stays_in_clumps():
    w = MetricWindow(TORUS, 2, 10.0)
    for s in derive_seeds(41, 10):
        cfg = sample_poisson(w, 1.0, s)
        h = build_hierarchy(cfg)
        m, level_of = greedy_with_levels(cfg, h, return_levels=True)
        assert m.partner == greedy_match_oracle(cfg, h)
        report = verify_matching(m, cfg.n)
        assert report.perfect_up_to_parity
        for i, j in m.pairs():
            k = level_of[i]
            assert level_of[j] == k
            assert h.labels[k][i] == h.labels[k][j]


def test_constructions_are_translation_equivariant():
    w = MetricWindow(TORUS, 2, 10.0)
    cfg = sample_poisson(w, 1.0, 57)
    shift = np.array([2.625, 8.125])
    moved = PointConfiguration(w, cfg.points + shift)

    h1, h2 = build_hierarchy(cfg), build_hierarchy(moved)
    t1, r1 = build_one_ended_tree(cfg, h1, return_roots=True)
    t2, r2 = build_one_ended_tree(moved, h2, return_roots=True)
    assert sorted(t1.edges) == sorted(t2.edges)
    assert dfs_order(t1, cfg, r1[0]) == dfs_order(t2, moved, r2[0])
    assert sorted(minimal_spanning_forest(cfg).edges) == sorted(
        minimal_spanning_forest(moved).edges
    )
    assert clump_greedy_matching(cfg, h1).partner == clump_greedy_matching(moved, h2).partner
