import numpy as np

from pointfactor import (
    BOX,
    DISK,
    TORUS,
    MetricWindow,
    PointConfiguration,
    derive_seeds,
    enrich_descending_chains,
    find_descending_chains,
    iterated_mnn_matching,
    mutually_closest_pairs,
    nearest_neighbor_digraph,
    sample_poisson,
    verify_matching,
)
from pointfactor.mnnmatch import (
    digraph_two_cycles,
    exclusion_region_empty,
    longest_descending_chain_exhaustive,
)

from oracles import mnn_resimulate


def line(*xs):
    return PointConfiguration(MetricWindow(BOX, 1, 100.0), [[float(x)] for x in xs])


def test_mutual_pairs_two_points():
    assert mutually_closest_pairs(line(0, 3)) == [(0, 1)]


def test_mutual_pairs_three_collinear():
    assert mutually_closest_pairs(line(0, 1, 3)) == [(0, 1)]


def test_mutual_pairs_two_disjoint():
    assert mutually_closest_pairs(line(0, 1, 2.5, 3)) == [(0, 1), (2, 3)]


def test_iterated_two_points():
    res = iterated_mnn_matching(line(0, 3))
    assert res.rounds == 1 and res.leftover == []
    assert res.matching.pairs() == [(0, 1)]


def test_iterated_three_collinear():
    res = iterated_mnn_matching(line(0, 1, 3))
    assert res.matching.pairs() == [(0, 1)]
    assert res.leftover == [2]
    assert res.rounds == 1


def test_iterated_two_rounds():
    # nearest(2.2) = 1 in round 1, so (2.2, 4) must wait for round 2
    res = iterated_mnn_matching(line(0, 1, 2.2, 4))
    assert res.rounds == 2
    assert res.matching.pairs() == [(0, 1), (2, 3)]
    assert res.round_of_pair == {0: 1, 1: 1, 2: 2, 3: 2}
    assert res.leftover == []


def test_annihilation_time_is_half_distance():
    cfg = line(0, 1, 3)
    res = iterated_mnn_matching(cfg)
    assert res.annihilation_time(cfg, 0) == 0.5


def test_round_one_equals_global_mutual_pairs():
    w = MetricWindow(TORUS, 2, 10.0)
    for s in derive_seeds(71, 10):
        cfg = sample_poisson(w, 1.0, s)
        if cfg.n < 2:
            continue
        res = iterated_mnn_matching(cfg)
        first = sorted(p for p in res.matching.pairs() if res.round_of_pair[p[0]] == 1)
        assert first == mutually_closest_pairs(cfg)


def test_matches_resimulation_and_monotone_rounds():
    windows = [
        MetricWindow(BOX, 1, 10.0),
        MetricWindow(BOX, 2, 10.0),
        MetricWindow(TORUS, 2, 10.0),
        MetricWindow(TORUS, 3, 6.0),
        MetricWindow(DISK, 2, 2.5),
    ]
    for t, s in enumerate(derive_seeds(83, 20)):
        w = windows[t % len(windows)]
        cfg = sample_poisson(w, 1.0, s)
        if cfg.n < 2:
            continue
        res = iterated_mnn_matching(cfg)
        rounds, leftover, round_mins = mnn_resimulate(cfg)
        got = {
            r: sorted(p for p in res.matching.pairs() if res.round_of_pair[p[0]] == r)
            for r in range(1, res.rounds + 1)
        }
        assert got == {r + 1: rounds[r] for r in range(len(rounds))}
        assert res.leftover == leftover
        # the minimum active distance never decreases between rounds
        assert all(a <= b + 1e-12 for a, b in zip(round_mins, round_mins[1:]))


def test_parity_law_across_sizes():
    w = MetricWindow(TORUS, 2, 20.0)
    rng = np.random.default_rng(17)
    for n in (2, 3, 4, 5, 10, 51, 200):
        cfg = PointConfiguration(w, w.sample_uniform(rng, n))
        res = iterated_mnn_matching(cfg)
        assert len(res.leftover) == n % 2
        assert verify_matching(res.matching, n).perfect_up_to_parity


def test_parity_on_poincare_disk():
    w = MetricWindow(DISK, 2, 3.0)
    for s in derive_seeds(29, 10):
        cfg = sample_poisson(w, 1.0, s)
        if cfg.n < 2:
            continue
        res = iterated_mnn_matching(cfg)
        assert len(res.leftover) == cfg.n % 2


def test_digraph_two_points():
    g = nearest_neighbor_digraph(line(0, 3))
    assert sorted(g.edges) == [(0, 1), (1, 0)]
    assert digraph_two_cycles(g) == [(0, 1)]


def test_digraph_three_collinear():
    g = nearest_neighbor_digraph(line(0, 1, 3))
    assert sorted(g.edges) == [(0, 1), (1, 0), (2, 1)]
    assert digraph_two_cycles(g) == [(0, 1)]


def test_digraph_small_subset_empty():
    cfg = line(0, 1, 3)
    g = nearest_neighbor_digraph(cfg, subset=np.array([1]))
    assert g.edges == []


def test_digraph_on_leftover_is_vacuous():
    # finite runs leave at most one point unmatched, so H is empty
    cfg = line(0, 1, 3)
    res = iterated_mnn_matching(cfg)
    g = nearest_neighbor_digraph(cfg, subset=np.array(res.leftover))
    assert g.edges == []


def test_exclusion_region_characterizes_mutual_pairs():
    w = MetricWindow(TORUS, 2, 10.0)
    cfg = sample_poisson(w, 1.0, 37)
    active = np.arange(cfg.n)
    mutual = set(mutually_closest_pairs(cfg))
    for i, j in list(mutual)[:5]:
        assert exclusion_region_empty(cfg, active, i, j)
    rng = np.random.default_rng(0)
    checked = 0
    while checked < 5:
        i, j = rng.integers(cfg.n, size=2)
        if i == j or (min(i, j), max(i, j)) in mutual:
            continue
        assert not exclusion_region_empty(cfg, active, int(i), int(j))
        checked += 1


def test_chain_collinear_example():
    report = find_descending_chains(line(0, 4, 6, 7), pair_cap=None)
    assert report.length == 3
    cfg = line(0, 4, 6, 7)
    gaps = [
        cfg.window.distance(cfg.points[a], cfg.points[b])
        for a, b in zip(report.longest, report.longest[1:])
    ]
    assert all(x > y for x, y in zip(gaps, gaps[1:]))
    assert not report.lower_bound


def test_chain_two_points():
    report = find_descending_chains(line(0, 7), pair_cap=None)
    assert report.length == 1
    assert report.longest == [0, 1]


def test_chain_edge_cases():
    w = MetricWindow(BOX, 1, 10.0)
    assert find_descending_chains(PointConfiguration(w, np.empty((0, 1)))).length == 0
    assert find_descending_chains(PointConfiguration(w, [[1.0]])).length == 0


def test_chain_matches_exhaustive_search():
    kinds = [
        MetricWindow(BOX, 2, 10.0),
        MetricWindow(TORUS, 2, 10.0),
        MetricWindow(DISK, 2, 2.0),
    ]
    rng = np.random.default_rng(11)
    for t, s in enumerate(derive_seeds(311, 40)):
        w = kinds[t % len(kinds)]
        n = int(rng.integers(2, 11))
        local = np.random.default_rng(s)
        cfg = PointConfiguration(w, w.sample_uniform(local, n))
        report = find_descending_chains(cfg, pair_cap=None)
        assert report.length == longest_descending_chain_exhaustive(cfg)
        assert len(report.longest) == report.length + 1
        assert len(set(report.longest)) == len(report.longest)


def test_chain_cap_flags_lower_bound():
    w = MetricWindow(TORUS, 2, 15.0)
    cfg = sample_poisson(w, 1.0, 3)
    capped = find_descending_chains(cfg, pair_cap=4, search_budget=5000)
    assert capped.lower_bound
    assert capped.length >= 1


def test_enriched_chain_is_found():
    w = MetricWindow(TORUS, 2, 10.0)
    base = sample_poisson(w, 1.0, 5)
    enriched = enrich_descending_chains(base, chain_length=5, ratio=0.5, seed=2)
    report = find_descending_chains(enriched)
    assert report.length >= 5
