from __future__ import annotations

from fractions import Fraction

import networkx as nx
import pytest
from hypothesis import given, settings, strategies as st

from congestbc import Digraph, GraphError, bc_definition_bruteforce, brandes_bc, fixture, generate, sssp_with_counts
from congestbc.graph import INF, bfs_hops, topological_order
from congestbc.oracle import (
    apsp,
    directed_diameter,
    enumerate_shortest_paths,
    floyd_warshall,
    llt_levels_oracle,
    longest_path_L,
    path_counts_bruteforce,
)

WEIGHTED_DAG = Digraph([1, 2, 3], {(1, 2): 1, (1, 3): 3, (2, 3): 2}, weighted=True, kind="dag")


def _small(seed: int) -> Digraph:
    n = 3 + seed % 10
    kind = ("random-digraph", "random-strongly-connected", "random-dag")[seed % 3]
    wmax = 1 + seed % 4 if kind == "random-dag" and seed % 2 else None
    return generate(kind, n, 0.2 + (seed % 4) * 0.1, wmax, seed)


def test_sssp_examples():
    dist, sigma, preds, _ = sssp_with_counts(fixture("p3"), 1)
    assert [dist[v] for v in (1, 2, 3)] == [0, 1, 2]
    assert [sigma[v] for v in (1, 2, 3)] == [1, 1, 1]
    assert preds[3] == {2} and preds[1] == frozenset()
    dist, sigma, preds, _ = sssp_with_counts(fixture("diamond"), 1)
    assert sigma[4] == 2 and preds[4] == {2, 3}
    dist, sigma, preds, _ = sssp_with_counts(WEIGHTED_DAG, 1)
    assert (dist[3], sigma[3], preds[3]) == (3, 2, {1, 2})


def test_unreachable_rows():
    dist, sigma, preds, _ = sssp_with_counts(fixture("p3"), 3)
    assert dist[1] == INF and sigma[1] == 0 and preds[1] == frozenset()


def test_bc_examples():
    assert brandes_bc(fixture("p3")) == {1: 0, 2: 1, 3: 0}
    half = Fraction(1, 2)
    assert brandes_bc(fixture("diamond")) == {1: 0, 2: half, 3: half, 4: 0}
    assert brandes_bc(generate("cycle", 4)) == {v: 3 for v in range(1, 5)}
    assert bc_definition_bruteforce(fixture("p3")) == {1: 0, 2: 1, 3: 0}
    assert bc_definition_bruteforce(fixture("diamond")) == brandes_bc(fixture("diamond"))


def test_bruteforce_size_limit():
    with pytest.raises(GraphError, match="brute force"):
        bc_definition_bruteforce(generate("cycle", 16))


@pytest.mark.parametrize("seed", range(200))
def test_brandes_equals_definition(seed):
    g = _small(seed)
    assert brandes_bc(g) == bc_definition_bruteforce(g)


@pytest.mark.parametrize("seed", range(60))
def test_sigma_equals_path_enumeration(seed):
    g = _small(seed)
    sol = apsp(g)
    counts = path_counts_bruteforce(g)
    for s in g.vertices:
        for v in g.vertices:
            assert sol.sigma[s][v] == counts.get((s, v), 0)


@pytest.mark.parametrize("seed", range(40))
def test_apsp_solution_invariants(seed):
    g = _small(seed)
    sol = apsp(g)
    fw = floyd_warshall(g)
    for s in g.vertices:
        assert (sol.dist[s][s], sol.sigma[s][s], sol.preds[s][s]) == (0, 1, frozenset())
        for v in g.vertices:
            assert sol.dist[s][v] == fw[(s, v)]
            if v == s or sol.dist[s][v] == INF:
                continue
            tight = {u for u in g.in_neighbors(v) if sol.dist[s][u] + g.weight(u, v) == sol.dist[s][v]}
            assert sol.preds[s][v] == tight
            assert sol.sigma[s][v] == sum(sol.sigma[s][u] for u in tight)


@pytest.mark.parametrize("seed", range(30))
def test_brandes_matches_networkx(seed):
    g = _small(seed)
    h = nx.DiGraph()
    h.add_nodes_from(g.vertices)
    h.add_weighted_edges_from((u, v, g.weight(u, v)) for u, v in g.edges)
    want = nx.betweenness_centrality(h, normalized=False, weight="weight" if g.weighted else None)
    got = brandes_bc(g)
    for v in g.vertices:
        assert float(got[v]) == pytest.approx(want[v], rel=1e-12, abs=1e-12)


def _path_lengths(g, s):
    """Every edge count of an s->v path, for each reachable v."""
    lengths = {s: {0}}
    for u in topological_order(g):
        for v in g.out_neighbors(u):
            if u in lengths:
                lengths.setdefault(v, set()).update(k + 1 for k in lengths[u])
    return lengths


def test_llt_examples():
    f1 = fixture("fig1-llt")
    lv = llt_levels_oracle(f1, f1.vertex_by_label("s"))
    assert [lv[f1.vertex_by_label(x)] for x in ("u", "v", "w")] == [4, 5, 8]
    assert llt_levels_oracle(fixture("diamond"), 1) == {1: 0, 2: 1, 3: 1, 4: 2}
    assert llt_levels_oracle(fixture("p3"), 1) == {1: 0, 2: 1, 3: 2}


def test_llt_errors():
    with pytest.raises(GraphError, match="dag"):
        llt_levels_oracle(generate("cycle", 3), 1)
    with pytest.raises(GraphError, match="unreachable"):
        llt_levels_oracle(fixture("p3"), 2)


@settings(max_examples=150, deadline=None)
@given(st.integers(2, 12), st.floats(0.05, 0.9), st.integers(0, 10**6))
def test_llt_level_versus_bfs_depth(n, p, seed):
    g = generate("random-dag", n, p, None, seed)
    s = topological_order(g)[0]
    reach = bfs_hops(g, s)
    sub = Digraph(reach, [(u, v) for u, v in g.edges if u in reach and v in reach], kind="dag")
    lv = llt_levels_oracle(sub, s)
    lengths = _path_lengths(sub, s)
    for v, depth in reach.items():
        assert lv[v] >= depth
        assert (lv[v] == depth) == (len(lengths[v]) == 1)
        assert lv[v] == max(lengths[v])


def test_diameter_and_L():
    assert directed_diameter(generate("cycle", 4)) == 3
    assert directed_diameter(fixture("p3")) == INF
    assert longest_path_L(fixture("p3")) == 2
    assert longest_path_L(fixture("fig1-llt")) == 8
    with pytest.raises(GraphError):
        longest_path_L(generate("cycle", 3))


def test_enumerate_weighted():
    assert sorted(enumerate_shortest_paths(WEIGHTED_DAG, 1, 3)) == [(1, 2, 3), (1, 3)]
