"""Sequential reference computations used as ground truth.

Everything is exact: path counts are Python ints, dependencies and
centralities are ``Fraction``.
"""
from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction

from .graph import INF, Digraph, GraphError, bfs_hops, topological_order

BRUTEFORCE_MAX_N = 15


@dataclass
class ApspSolution:
    """Rows keyed by source: ``dist[s][v]``, ``sigma[s][v]``, ``preds[s][v]``."""

    dist: dict[int, dict[int, float]] = field(default_factory=dict)
    sigma: dict[int, dict[int, int]] = field(default_factory=dict)
    preds: dict[int, dict[int, frozenset]] = field(default_factory=dict)

    def sources(self) -> list[int]:
        return sorted(self.dist)

    def mismatches(self, other: "ApspSolution") -> list[tuple[int, int, str]]:
        """(s, v, field) triples where the two solutions disagree."""
        bad = []
        for s in sorted(set(self.dist) | set(other.dist)):
            row_a, row_b = self.dist.get(s, {}), other.dist.get(s, {})
            for v in sorted(set(row_a) | set(row_b)):
                if row_a.get(v) != row_b.get(v):
                    bad.append((s, v, "dist"))
                elif self.sigma[s][v] != other.sigma[s][v]:
                    bad.append((s, v, "sigma"))
                elif self.preds[s][v] != other.preds[s][v]:
                    bad.append((s, v, "preds"))
        return bad


def sssp_with_counts(g: Digraph, s: int):
    """Distances, shortest-path counts and predecessor sets from ``s``.

    BFS on unweighted graphs, Dijkstra otherwise.  Unreachable vertices get
    distance INF, count 0 and no predecessors.
    """
    dist: dict[int, float] = {v: INF for v in g.vertices}
    sigma = {v: 0 for v in g.vertices}
    preds: dict[int, set] = {v: set() for v in g.vertices}
    dist[s], sigma[s] = 0, 1
    order: list[int] = []
    if not g.weighted:
        q = deque([s])
        while q:
            u = q.popleft()
            order.append(u)
            for v in g.out_neighbors(u):
                if dist[v] == INF:
                    dist[v] = dist[u] + 1
                    q.append(v)
                if dist[v] == dist[u] + 1:
                    sigma[v] += sigma[u]
                    preds[v].add(u)
    else:
        done = set()
        heap = [(0, s)]
        while heap:
            d, u = heapq.heappop(heap)
            if u in done:
                continue
            done.add(u)
            order.append(u)
            for v in g.out_neighbors(u):
                nd = d + g.weight(u, v)
                if nd < dist[v]:
                    dist[v] = nd
                    sigma[v] = sigma[u]
                    preds[v] = {u}
                    heapq.heappush(heap, (nd, v))
                elif nd == dist[v]:
                    sigma[v] += sigma[u]
                    preds[v].add(u)
    return dist, sigma, {v: frozenset(p) for v, p in preds.items()}, order


def apsp(g: Digraph) -> ApspSolution:
    sol = ApspSolution()
    for s in g.vertices:
        dist, sigma, preds, _ = sssp_with_counts(g, s)
        sol.dist[s], sol.sigma[s], sol.preds[s] = dist, sigma, preds
    return sol


def dependencies(g: Digraph, s: int) -> dict[int, Fraction]:
    """Brandes accumulation for one source (exact)."""
    dist, sigma, preds, _ = sssp_with_counts(g, s)
    reached = [v for v in g.vertices if dist[v] != INF]
    # stack order: non-increasing distance, id tiebreak only for determinism
    stack = sorted(reached, key=lambda v: (dist[v], v))
    delta = {v: Fraction(0) for v in g.vertices}
    while stack:
        w = stack.pop()
        for v in preds[w]:
            delta[v] += Fraction(sigma[v], sigma[w]) * (1 + delta[w])
    return delta


def brandes_bc(g: Digraph, *, with_table: bool = False):
    bc = {v: Fraction(0) for v in g.vertices}
    table = {}
    for s in g.vertices:
        delta = dependencies(g, s)
        for w in g.vertices:
            if w != s:
                bc[w] += delta[w]
        if with_table:
            table[s] = delta
    return (bc, table) if with_table else bc


def floyd_warshall(g: Digraph) -> dict[tuple[int, int], float]:
    d = {(u, v): (0 if u == v else INF) for u in g.vertices for v in g.vertices}
    for (u, v) in g.edges:
        d[(u, v)] = g.weight(u, v)
    for k in g.vertices:
        for i in g.vertices:
            dik = d[(i, k)]
            if dik == INF:
                continue
            for j in g.vertices:
                alt = dik + d[(k, j)]
                if alt < d[(i, j)]:
                    d[(i, j)] = alt
    return d


def enumerate_shortest_paths(g: Digraph, s: int, t: int, dist=None) -> list[tuple[int, ...]]:
    """All shortest s->t paths, found by depth-first extension along tight edges."""
    dist = dist or floyd_warshall(g)
    if dist[(s, t)] == INF:
        return []
    target = dist[(s, t)]
    paths = []

    def extend(path, acc):
        u = path[-1]
        if u == t:
            paths.append(tuple(path))
            return
        for v in g.out_neighbors(u):
            nd = acc + g.weight(u, v)
            if nd + dist[(v, t)] == target and v not in path:
                path.append(v)
                extend(path, nd)
                path.pop()

    extend([s], 0)
    return paths


def bc_definition_bruteforce(g: Digraph) -> dict[int, Fraction]:
    """Betweenness straight from the definition over enumerated shortest paths."""
    if g.n > BRUTEFORCE_MAX_N:
        raise GraphError(f"brute force limited to n <= {BRUTEFORCE_MAX_N}")
    dist = floyd_warshall(g)
    bc = {v: Fraction(0) for v in g.vertices}
    for s in g.vertices:
        for t in g.vertices:
            if s == t:
                continue
            paths = enumerate_shortest_paths(g, s, t, dist)
            if not paths:
                continue
            through = {v: 0 for v in g.vertices}
            for p in paths:
                for v in p[1:-1]:
                    through[v] += 1
            for v, c in through.items():
                if c:
                    bc[v] += Fraction(c, len(paths))
    return bc


def path_counts_bruteforce(g: Digraph) -> dict[tuple[int, int], int]:
    dist = floyd_warshall(g)
    return {
        (s, t): (1 if s == t else len(enumerate_shortest_paths(g, s, t, dist)))
        for s in g.vertices
        for t in g.vertices
        if dist[(s, t)] != INF
    }


def llt_levels_oracle(g: Digraph, s: int) -> dict[int, int]:
    """Longest edge count of any s->v path, by dynamic programming in topological order."""
    order = topological_order(g)
    if order is None:
        raise GraphError("llt levels need a dag")
    level: dict[int, float] = {v: -INF for v in g.vertices}
    level[s] = 0
    for u in order:
        if level[u] == -INF:
            continue
        for v in g.out_neighbors(u):
            level[v] = max(level[v], level[u] + 1)
    missing = [v for v in g.vertices if level[v] == -INF]
    if missing:
        raise GraphError(f"vertices unreachable from {s}: {missing}")
    return {v: int(lv) for v, lv in level.items()}


def directed_diameter(g: Digraph) -> float:
    """Largest hop distance over ordered pairs; INF unless strongly connected."""
    worst = 0
    for s in g.vertices:
        hops = bfs_hops(g, s)
        if len(hops) < g.n:
            return INF
        worst = max(worst, max(hops.values()))
    return worst


def longest_path_L(g: Digraph) -> int:
    order = topological_order(g)
    if order is None:
        raise GraphError("longest path length needs a dag")
    depth = {v: 0 for v in g.vertices}
    for u in order:
        for v in g.out_neighbors(u):
            depth[v] = max(depth[v], depth[u] + 1)
    return max(depth.values())
