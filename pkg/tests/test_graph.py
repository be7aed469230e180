from __future__ import annotations

import math

import pytest
from hypothesis import given, settings, strategies as st

from congestbc import Digraph, GraphError, classify, fixture, generate, parse_edge_list, serialize_edge_list
from congestbc.graph import INF, normalize_edge_list, topological_order
from congestbc.oracle import floyd_warshall


def test_parse_path():
    g = parse_edge_list("3 2 directed unweighted\n1 2\n2 3")
    assert g.vertices == (1, 2, 3)
    assert g.edges == ((1, 2), (2, 3))
    assert not g.weighted
    assert g.in_neighbors(3) == (2,) and g.out_neighbors(1) == (2,)


def test_parse_weighted_dag():
    g = parse_edge_list("4 5 dag weighted\n1 2 3\n1 3 1\n2 4 1\n3 4 4\n2 3 1")
    assert g.n == 4 and g.m == 5 and g.weighted and g.kind == "dag"
    assert g.weight(1, 2) == 3 and g.weight(3, 4) == 4
    assert classify(g).is_dag


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("2 1 directed unweighted\n1 1", "self-loop"),
        ("3 2 directed\n1 2\n2 3", "header"),
        ("x 2 directed unweighted\n1 2\n2 3", "header"),
        ("3 1 directed unweighted\n1 4", "out of range"),
        ("3 2 directed unweighted\n1 2\n1 2", "duplicate"),
        ("3 1 dag weighted\n1 2 0", "nonpositive"),
        ("3 1 directed unweighted\n1 2 5", "weight present"),
        ("3 2 directed unweighted\n1 2", "announces"),
        ("", "empty"),
    ],
)
def test_parse_errors(text, fragment):
    with pytest.raises(GraphError, match=fragment):
        parse_edge_list(text)


def test_declared_dag_with_cycle_rejected():
    with pytest.raises(GraphError, match="cycle"):
        parse_edge_list("2 2 dag unweighted\n1 2\n2 1")


def test_digraph_invariants():
    g = generate("random-digraph", 15, 0.3, None, 4)
    for u, v in g.edges:
        assert u in g.in_neighbors(v) and v in g.out_neighbors(u)
    assert sum(len(g.out_neighbors(v)) for v in g.vertices) == g.m
    with pytest.raises(GraphError):
        Digraph([1, 2], {(1, 2): 0}, weighted=True)


edge_texts = st.builds(
    lambda n, pairs, weighted, dag: _edge_text(n, pairs, weighted, dag),
    st.integers(2, 8),
    st.lists(st.tuples(st.integers(1, 8), st.integers(1, 8), st.integers(1, 50)), max_size=30),
    st.booleans(),
    st.booleans(),
)


def _edge_text(n, pairs, weighted, dag):
    seen = {}
    for u, v, w in pairs:
        u, v = (u - 1) % n + 1, (v - 1) % n + 1
        if dag:
            u, v = min(u, v), max(u, v)
        if u != v and (u, v) not in seen:
            seen[(u, v)] = w
    head = f"{n} {len(seen)} {'dag' if dag else 'directed'} {'weighted' if weighted else 'unweighted'}"
    lines = [f"{u}  {v} {w}" if weighted else f"{u} {v}" for (u, v), w in seen.items()]
    return "\n".join([head, "# comment", *lines, ""])


@settings(max_examples=200, deadline=None)
@given(edge_texts)
def test_round_trip(text):
    assert serialize_edge_list(parse_edge_list(text)) == normalize_edge_list(text)


def _fw_report(g):
    dist = floyd_warshall(g)
    und = Digraph(g.vertices, {(u, v) for a, b in g.edges for u, v in ((a, b), (b, a))})
    udist = floyd_warshall(und)
    pairs = [(s, t) for s in g.vertices for t in g.vertices if s != t]
    strongly = all(dist[p] < INF for p in pairs)
    weakly = all(udist[p] < INF for p in pairs)
    return strongly, weakly, max((dist[p] for p in pairs), default=0), max((udist[p] for p in pairs), default=0)


@pytest.mark.parametrize("seed", range(200))
def test_classify_matches_floyd_warshall(seed):
    n = 2 + seed % 9
    g = generate("random-digraph", n, 0.15 + (seed % 5) * 0.1, None, seed)
    rep = classify(g)
    strongly, weakly, d, du = _fw_report(g)
    assert rep.strongly_connected == strongly
    assert rep.weakly_connected == weakly
    assert rep.directed_diameter == (d if strongly else INF)
    assert rep.undirected_diameter == (du if weakly else INF)
    assert rep.is_dag == (topological_order(g) is not None)
    if rep.is_dag:
        assert not rep.strongly_connected
    if strongly and weakly:
        assert rep.directed_diameter >= rep.undirected_diameter


def test_classify_examples():
    c4 = classify(generate("cycle", 4))
    assert (c4.strongly_connected, c4.directed_diameter, c4.undirected_diameter) == (True, 3, 2)
    p3 = classify(fixture("p3"))
    assert not p3.strongly_connected and p3.is_dag and p3.longest_path_L == 2
    assert math.isinf(p3.directed_diameter)
    assert classify(fixture("fig1-llt")).longest_path_L == 8


def test_generate_examples():
    assert generate("cycle", 4).edges == ((1, 2), (2, 3), (3, 4), (4, 1))
    assert classify(generate("random-strongly-connected", 10, 0.2, None, 7)).strongly_connected
    g = generate("random-dag", 12, 0.3, 10, 3)
    assert classify(g).is_dag
    assert all(1 <= g.weight(u, v) <= 10 for u, v in g.edges)


def test_generate_deterministic():
    a = generate("random-strongly-connected", 20, 0.2, None, 9)
    b = generate("random-strongly-connected", 20, 0.2, None, 9)
    assert a.edges == b.edges


@pytest.mark.parametrize(
    "args",
    [("nope", 4), ("cycle", 0), ("random-digraph", 5, 1.5), ("cycle", 4, 0, 5), ("random-dag", 4, 0.5, 0)],
)
def test_generate_errors(args):
    with pytest.raises(GraphError):
        generate(*args)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 30), st.floats(0, 1), st.integers(1, 100), st.integers(0, 10**6))
def test_random_dag_always_topologically_sortable(n, p, wmax, seed):
    g = generate("random-dag", n, p, wmax, seed)
    assert topological_order(g) is not None


def test_fixtures():
    f2 = fixture("fig2-congestion")
    assert (f2.n, f2.m) == (8, 9)
    assert f2.has_edge(f2.vertex_by_label("w"), f2.vertex_by_label("u4"))
    d = fixture("diamond")
    assert [d.label(v) for v in d.vertices] == ["s", "a", "b", "t"]
    assert classify(fixture("p3")).longest_path_L == 2
    with pytest.raises(GraphError, match="unknown fixture"):
        fixture("nope")
