import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sourceloc import (
    Snapshot,
    bnd,
    boundary_nodes,
    build_graph,
    eccentricities,
    gen_er,
    infection_subgraph,
    jordan_centers,
    sft_estimate,
    simulate_ic,
    wbnd,
)
from sourceloc.errors import DisconnectedInfection
from sourceloc.localization import Q_CLAMP

from conftest import (
    brute_eccentricities,
    cycle_graph,
    two_center_graph,
    min_id_bfs_tree,
    path_graph,
    random_connected_graph,
    star_graph,
)

LOG2 = abs(math.log(0.5))


def snap_of(g, infected):
    return Snapshot(g.n, infected)


def oracle_scores(g, infected, v):
    """WBND and BND straight from the definition, in plain Python."""
    dist, parent = min_id_bfs_tree(g, infected, v)
    e = max(dist.values())
    boundary = [u for u, d in dist.items() if d == e]
    w = 0.0
    b = 0
    for u in boundary:
        par = parent.get(u)
        for x in g.neighbors(u):
            x = int(x)
            if x == par:
                continue
            q = min(g.weight(u, x), Q_CLAMP)
            w += abs(math.log(1.0 - q))
        b += int(g.degree[u]) - 1
    return w, b


def literal_rounds(g, infected):
    """Round-by-round ID broadcast on g_i until some node has heard every ID."""
    nodes = sorted(int(u) for u in infected)
    s = set(nodes)
    nbrs = {u: [int(w) for w in g.neighbors(u) if int(w) in s] for u in nodes}
    known = {u: {u: 0} for u in nodes}
    fresh = {u: {u} for u in nodes}
    rounds = 0
    while not any(len(known[u]) == len(nodes) for u in nodes):
        rounds += 1
        inbox = {u: set() for u in nodes}
        for u in nodes:
            for w in nbrs[u]:
                inbox[w] |= fresh[u]
        for u in nodes:
            fresh[u] = {x for x in inbox[u] if x not in known[u]}
            for x in fresh[u]:
                known[u][x] = rounds
    return rounds, known


class TestInfectionSubgraph:
    def test_full_path(self):
        gi = infection_subgraph(path_graph(5), range(5))
        assert gi.size == 5 and sorted(gi.edges()) == [(0, 1), (1, 2), (2, 3), (3, 4)]

    def test_disconnected(self):
        with pytest.raises(DisconnectedInfection):
            infection_subgraph(path_graph(5), [0, 1, 3, 4])

    def test_star_pair(self):
        gi = infection_subgraph(star_graph(4), [0, 1])
        assert gi.edges() == [(0, 1)]


class TestEccentricity:
    def test_path(self):
        ecc = eccentricities(infection_subgraph(path_graph(5), range(5)))
        assert ecc.as_dict() == {0: 4, 1: 3, 2: 2, 3: 3, 4: 4}
        assert jordan_centers(ecc) == {2}

    def test_even_path(self):
        assert jordan_centers(eccentricities(infection_subgraph(path_graph(4), range(4)))) == {1, 2}

    def test_cycle(self):
        ecc = eccentricities(infection_subgraph(cycle_graph(4), range(4)))
        assert set(ecc.as_dict().values()) == {2}
        assert jordan_centers(ecc) == {0, 1, 2, 3}

    def test_matches_floyd_warshall_500_graphs(self):
        rng = np.random.default_rng(123)
        for _ in range(500):
            n = int(rng.integers(1, 21))
            g = random_connected_graph(rng, n, float(rng.uniform(0.0, 0.4)))
            k = int(rng.integers(1, n + 1))
            # a random connected subset: BFS prefix from a random node
            start = int(rng.integers(n))
            dist, _ = min_id_bfs_tree(g, range(n), start)
            infected = sorted(sorted(dist, key=lambda u: (dist[u], u))[:k])
            gi = infection_subgraph(g, infected)
            ecc = eccentricities(gi)
            ref = brute_eccentricities(g, infected)
            assert ecc.as_dict() == ref
            assert jordan_centers(ecc) == {u for u, e in ref.items() if e == min(ref.values())}
            for a, b in gi.edges():
                assert abs(ref[a] - ref[b]) <= 1


class TestBoundary:
    def test_path(self):
        b = boundary_nodes(infection_subgraph(path_graph(5), range(5)), 2)
        assert set(b.nodes) == {0, 4} and b.parents == {0: 1, 4: 3} and b.eccentricity == 2

    def test_star(self):
        b = boundary_nodes(infection_subgraph(star_graph(5), range(6)), 0)
        assert set(b.nodes) == {1, 2, 3, 4, 5}

    def test_single_node(self):
        b = boundary_nodes(infection_subgraph(path_graph(3), [1]), 1)
        assert b.nodes == (1,) and b.parents == {1: None} and b.eccentricity == 0

    def test_min_id_parent(self):
        # 3 is two hops from 0 via 1 or 2; the parent is the smaller id
        g = build_graph(4, [(0, 1, 0.5), (0, 2, 0.5), (1, 3, 0.5), (2, 3, 0.5)])
        b = boundary_nodes(infection_subgraph(g, range(4)), 0)
        assert b.nodes == (3,) and b.parents == {3: 1}


class TestScores:
    def test_path_scores_zero(self):
        g = path_graph(5)
        gi = infection_subgraph(g, range(5))
        assert wbnd(g, gi, 2) == 0.0 and bnd(g, gi, 2) == 0

    def test_hand_example(self):
        g = build_graph(6, [(0, 1, 0.5), (1, 2, 0.5), (0, 5, 0.5)])
        gi = infection_subgraph(g, [0, 1, 2])
        assert wbnd(g, gi, 1) == pytest.approx(0.6931, abs=1e-4)
        assert bnd(g, gi, 1) == 1

    def test_star_bnd_zero(self):
        g = star_graph(6)
        assert bnd(g, infection_subgraph(g, range(7)), 0) == 0

    def test_two_center_example(self):
        g = two_center_graph()
        gi = infection_subgraph(g, [1, 2, 3, 4])
        assert jordan_centers(eccentricities(gi)) == {1, 2}
        assert wbnd(g, gi, 1) == pytest.approx(13 * LOG2, rel=1e-12)
        assert wbnd(g, gi, 2) == pytest.approx(9 * LOG2, rel=1e-12)
        assert sft_estimate(g, snap_of(g, [1, 2, 3, 4])).estimator == 1

    def test_certain_edge_clamped(self):
        g = build_graph(4, [(0, 1, 0.5), (1, 2, 0.5), (0, 3, 1.0)])
        gi = infection_subgraph(g, [0, 1, 2])
        w = wbnd(g, gi, 1)
        assert math.isfinite(w) and w == pytest.approx(-math.log(1 - Q_CLAMP))

    @settings(max_examples=200, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 16))
    def test_matches_oracle(self, seed, n):
        rng = np.random.default_rng(seed)
        g = random_connected_graph(rng, n + 4, 0.2)
        snap = simulate_ic(g, int(rng.integers(g.n)), int(rng.integers(0, 5)), rng)
        gi = infection_subgraph(g, snap.infected)
        for v in snap.infected.tolist():
            w, b = oracle_scores(g, snap.infected.tolist(), v)
            assert wbnd(g, gi, v) == pytest.approx(w, rel=1e-12, abs=1e-12)
            assert bnd(g, gi, v) == b

    @settings(max_examples=200, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(0.05, 0.95))
    def test_homogeneous_reduction(self, seed, q):
        rng = np.random.default_rng(seed)
        g = random_connected_graph(rng, int(rng.integers(3, 25)), 0.15)
        g = g.with_weights(np.full(g.num_edges, q))
        snap = simulate_ic(g, int(rng.integers(g.n)), 3, rng)
        gi = infection_subgraph(g, snap.infected)
        if gi.size >= 2:
            c = abs(math.log(1 - q))
            for v in snap.infected.tolist():
                assert wbnd(g, gi, v) == pytest.approx(bnd(g, gi, v) * c, rel=1e-9, abs=1e-12)
        a = sft_estimate(g, snap, "wbnd")
        b = sft_estimate(g, snap, "bnd")
        assert a.estimator == b.estimator


class TestSFT:
    @pytest.mark.parametrize("mode", ["wbnd", "bnd"])
    def test_path(self, mode):
        g = path_graph(5)
        res = sft_estimate(g, snap_of(g, range(5)), mode)
        assert res.estimator == 2 and res.algorithm == f"sft-{mode}"

    def test_cycle_tie_goes_to_lowest_id(self):
        g = cycle_graph(4)
        res = sft_estimate(g, snap_of(g, range(4)))
        assert res.estimator == 0 and res.ranking.tolist() == [0, 1, 2, 3]

    def test_bad_mode(self):
        g = path_graph(3)
        with pytest.raises(ValueError):
            sft_estimate(g, snap_of(g, range(3)), "xyz")

    @settings(max_examples=150, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_ranking_key_and_center(self, seed):
        rng = np.random.default_rng(seed)
        g = random_connected_graph(rng, int(rng.integers(2, 40)), 0.1)
        snap = simulate_ic(g, int(rng.integers(g.n)), 4, rng)
        res = sft_estimate(g, snap)
        ecc = res.eccentricity
        assert sorted(res.ranking.tolist()) == snap.infected.tolist()
        assert res.estimator in jordan_centers(eccentricities(infection_subgraph(g, snap.infected)))
        sc = res.scores
        keys = [(sc[u][0], -sc[u][1], u) for u in res.ranking.tolist()]
        assert keys == sorted(keys)
        assert res.rank_of(res.estimator) == 1
        assert ecc.min() == min(k[0] for k in keys)

    @settings(max_examples=150, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_early_exit_same_estimator(self, seed):
        rng = np.random.default_rng(seed)
        g = random_connected_graph(rng, int(rng.integers(2, 60)), 0.08)
        snap = simulate_ic(g, int(rng.integers(g.n)), 5, rng)
        for mode in ("wbnd", "bnd"):
            full = sft_estimate(g, snap, mode)
            fast = sft_estimate(g, snap, mode, full_ranking=False)
            assert fast.estimator == full.estimator
            assert sorted(fast.ranking.tolist()) == snap.infected.tolist()

    def test_er_early_exit(self):
        rng = np.random.default_rng(8)
        g = gen_er(3000, 0.003, rng)
        g = g.with_weights(rng.uniform(0.2, 0.5, g.num_edges))
        for _ in range(10):
            snap = simulate_ic(g, int(rng.integers(g.n)), 6, rng)
            if snap.size < 2:
                continue
            assert sft_estimate(g, snap, full_ranking=False).estimator == sft_estimate(g, snap).estimator


class TestLiteralMessagePassing:
    @settings(max_examples=150, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_rounds_equal_min_eccentricity(self, seed):
        rng = np.random.default_rng(seed)
        g = random_connected_graph(rng, int(rng.integers(1, 30)), 0.1)
        snap = simulate_ic(g, int(rng.integers(g.n)), 5, rng)
        rounds, known = literal_rounds(g, snap.infected)
        gi = infection_subgraph(g, snap.infected)
        ecc = eccentricities(gi)
        assert rounds == ecc.minimum
        # after the last round the nodes that heard everything are exactly the Jordan centers
        full = {u for u, d in known.items() if len(d) == snap.size}
        assert full == jordan_centers(ecc)
