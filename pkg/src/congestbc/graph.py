"""Directed graph model, generators, named fixtures and edge-list I/O.

Vertices are integers, ``1..n`` unless a graph is built explicitly with
another id space (used only by the id-relabeling phase).  Edges may carry a
positive integer weight; unweighted graphs report weight 1 everywhere.
"""
from __future__ import annotations

import math
import random
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

INF = math.inf

KINDS = ("directed", "dag")
GENERATOR_KINDS = (
    "random-digraph",
    "random-strongly-connected",
    "random-dag",
    "cycle",
    "path",
    "complete",
)
FIXTURES = ("fig1-llt", "fig2-congestion", "diamond", "p3")


class GraphError(ValueError):
    """Invalid graph construction or malformed edge-list input."""


class Digraph:
    """Immutable simple directed graph with optional positive integer weights."""

    __slots__ = ("_vertices", "_weights", "_weighted", "_kind", "_in", "_out", "_nbrs", "labels")

    def __init__(
        self,
        vertices: Iterable[int],
        edges: Iterable[tuple[int, int]] | Mapping[tuple[int, int], int],
        *,
        weighted: bool = False,
        kind: str = "directed",
        labels: Mapping[int, str] | None = None,
    ):
        verts = tuple(sorted(set(vertices)))
        if len(verts) == 0:
            raise GraphError("graph must have at least one vertex")
        vset = set(verts)
        if isinstance(edges, Mapping):
            items = list(edges.items())
        else:
            items = [((e[0], e[1]), e[2] if len(e) > 2 else None) for e in edges]
        weights: dict[tuple[int, int], int] = {}
        for (u, v), w in items:
            if u not in vset or v not in vset:
                raise GraphError(f"edge ({u},{v}) references an unknown vertex")
            if u == v:
                raise GraphError(f"self-loop at vertex {u}")
            if (u, v) in weights:
                raise GraphError(f"duplicate edge ({u},{v})")
            if weighted:
                if w is None or int(w) != w or w < 1:
                    raise GraphError(f"edge ({u},{v}) needs a positive integer weight, got {w!r}")
                weights[(u, v)] = int(w)
            else:
                if w not in (None, 1):
                    raise GraphError(f"weight given for edge ({u},{v}) of an unweighted graph")
                weights[(u, v)] = 1
        if kind not in KINDS:
            raise GraphError(f"unknown graph kind {kind!r}")
        self._vertices = verts
        self._weights = dict(sorted(weights.items()))
        self._weighted = weighted
        self._kind = kind
        ins: dict[int, list[int]] = {v: [] for v in verts}
        outs: dict[int, list[int]] = {v: [] for v in verts}
        for u, v in self._weights:
            outs[u].append(v)
            ins[v].append(u)
        self._in = {v: tuple(sorted(ins[v])) for v in verts}
        self._out = {v: tuple(sorted(outs[v])) for v in verts}
        self._nbrs = {v: tuple(sorted(set(ins[v]) | set(outs[v]))) for v in verts}
        self.labels = dict(labels or {})
        if kind == "dag" and topological_order(self) is None:
            raise GraphError("graph declared as dag contains a cycle")

    @property
    def vertices(self) -> tuple[int, ...]:
        return self._vertices

    @property
    def n(self) -> int:
        return len(self._vertices)

    @property
    def m(self) -> int:
        return len(self._weights)

    @property
    def weighted(self) -> bool:
        return self._weighted

    @property
    def kind(self) -> str:
        return self._kind

    @property
    def edges(self) -> tuple[tuple[int, int], ...]:
        return tuple(self._weights)

    def weight(self, u: int, v: int) -> int:
        return self._weights[(u, v)]

    def has_edge(self, u: int, v: int) -> bool:
        return (u, v) in self._weights

    def in_neighbors(self, v: int) -> tuple[int, ...]:
        return self._in[v]

    def out_neighbors(self, v: int) -> tuple[int, ...]:
        return self._out[v]

    def neighbors(self, v: int) -> tuple[int, ...]:
        """Communication neighbors: channels are bidirectional over every edge."""
        return self._nbrs[v]

    @property
    def wmax(self) -> int:
        return max(self._weights.values(), default=1)

    def label(self, v: int) -> str:
        return self.labels.get(v, f"v{v}")

    def vertex_by_label(self, name: str) -> int:
        for v, lab in self.labels.items():
            if lab == name:
                return v
        raise KeyError(name)

    def has_standard_ids(self) -> bool:
        return self._vertices == tuple(range(1, self.n + 1))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Digraph):
            return NotImplemented
        return (
            self._vertices == other._vertices
            and self._weights == other._weights
            and self._weighted == other._weighted
        )

    def __hash__(self) -> int:
        return hash((self._vertices, tuple(self._weights.items()), self._weighted))

    def __repr__(self) -> str:
        w = "weighted" if self._weighted else "unweighted"
        return f"Digraph(n={self.n}, m={self.m}, {self._kind}, {w})"


@dataclass(frozen=True)
class GraphClassReport:
    strongly_connected: bool
    weakly_connected: bool
    is_dag: bool
    directed_diameter: float  # int, or INF
    undirected_diameter: float  # int, or INF when disconnected
    longest_path_L: int | None  # only for dags


# ---------------------------------------------------------------------------
# structural helpers


def topological_order(g: Digraph) -> list[int] | None:
    """Kahn's algorithm; ``None`` when the graph has a cycle."""
    indeg = {v: len(g.in_neighbors(v)) for v in g.vertices}
    ready = [v for v in g.vertices if indeg[v] == 0]
    order: list[int] = []
    while ready:
        u = ready.pop()
        order.append(u)
        for v in g.out_neighbors(u):
            indeg[v] -= 1
            if indeg[v] == 0:
                ready.append(v)
    return order if len(order) == g.n else None


def bfs_hops(g: Digraph, s: int, *, undirected: bool = False) -> dict[int, int]:
    step = g.neighbors if undirected else g.out_neighbors
    dist = {s: 0}
    q = deque([s])
    while q:
        u = q.popleft()
        for v in step(u):
            if v not in dist:
                dist[v] = dist[u] + 1
                q.append(v)
    return dist


def classify(g: Digraph) -> GraphClassReport:
    n = g.n
    directed = [bfs_hops(g, s) for s in g.vertices]
    undirected = [bfs_hops(g, s, undirected=True) for s in g.vertices]
    strongly = all(len(d) == n for d in directed)
    weakly = len(undirected[0]) == n
    d_dir = max(max(d.values()) for d in directed) if strongly else INF
    d_und = max(max(d.values()) for d in undirected) if weakly else INF
    order = topological_order(g)
    is_dag = order is not None
    L = None
    if is_dag:
        depth = {v: 0 for v in g.vertices}
        for u in order:
            for v in g.out_neighbors(u):
                depth[v] = max(depth[v], depth[u] + 1)
        L = max(depth.values())
    return GraphClassReport(strongly, weakly, is_dag, d_dir, d_und, L)


# ---------------------------------------------------------------------------
# edge-list I/O


def parse_edge_list(text: str) -> Digraph:
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise GraphError("empty edge list")
    head = lines[0].split()
    if len(head) != 4:
        raise GraphError(f"malformed header {lines[0]!r}: expected 'n m directed|dag weighted|unweighted'")
    try:
        n, m = int(head[0]), int(head[1])
    except ValueError:
        raise GraphError(f"malformed header {lines[0]!r}") from None
    kind, wmode = head[2], head[3]
    if n < 1 or m < 0 or kind not in KINDS or wmode not in ("weighted", "unweighted"):
        raise GraphError(f"malformed header {lines[0]!r}")
    weighted = wmode == "weighted"
    body = lines[1:]
    if len(body) != m:
        raise GraphError(f"header announces {m} edges but {len(body)} edge lines follow")
    edges: dict[tuple[int, int], int | None] = {}
    for ln in body:
        parts = ln.split()
        want = 3 if weighted else 2
        if len(parts) != want:
            if not weighted and len(parts) == 3:
                raise GraphError(f"weight present in unweighted edge list: {ln!r}")
            raise GraphError(f"malformed edge line {ln!r}")
        try:
            nums = [int(x) for x in parts]
        except ValueError:
            raise GraphError(f"malformed edge line {ln!r}") from None
        u, v = nums[0], nums[1]
        if not (1 <= u <= n and 1 <= v <= n):
            raise GraphError(f"vertex id out of range 1..{n} in {ln!r}")
        if u == v:
            raise GraphError(f"self-loop at vertex {u}")
        if (u, v) in edges:
            raise GraphError(f"duplicate edge ({u},{v})")
        if weighted and nums[2] < 1:
            raise GraphError(f"nonpositive weight in {ln!r}")
        edges[(u, v)] = nums[2] if weighted else None
    return Digraph(range(1, n + 1), edges, weighted=weighted, kind=kind)


def serialize_edge_list(g: Digraph) -> str:
    if not g.has_standard_ids():
        raise GraphError("edge-list format requires vertex ids 1..n")
    wmode = "weighted" if g.weighted else "unweighted"
    out = [f"{g.n} {g.m} {g.kind} {wmode}"]
    for u, v in g.edges:
        out.append(f"{u} {v} {g.weight(u, v)}" if g.weighted else f"{u} {v}")
    return "\n".join(out) + "\n"


def normalize_edge_list(text: str) -> str:
    """Canonical text form: single-spaced header, edges sorted, no blanks or comments."""
    lines = [ln.split() for ln in text.splitlines()]
    lines = [p for p in lines if p and not p[0].startswith("#")]
    head, body = lines[0], sorted(tuple(int(x) for x in p) for p in lines[1:])
    return "\n".join([" ".join(head)] + [" ".join(map(str, e)) for e in body]) + "\n"


# ---------------------------------------------------------------------------
# generators


def generate(
    kind: str,
    n: int,
    p: float | Fraction = 0,
    wmax: int | None = None,
    seed: int = 0,
) -> Digraph:
    if kind not in GENERATOR_KINDS:
        raise GraphError(f"unknown generator kind {kind!r}")
    if n < 1:
        raise GraphError("n must be at least 1")
    p = Fraction(p) if not isinstance(p, float) else p
    if not 0 <= p <= 1:
        raise GraphError("density p must lie in [0, 1]")
    if wmax is not None and kind != "random-dag":
        raise GraphError("wmax is only meaningful for random-dag")
    if wmax is not None and wmax < 1:
        raise GraphError("wmax must be a positive integer")
    rng = random.Random(seed)
    verts = range(1, n + 1)
    pf = float(p)

    if kind == "cycle":
        edges = [(i, i % n + 1) for i in verts] if n > 1 else []
        return Digraph(verts, edges)
    if kind == "path":
        return Digraph(verts, [(i, i + 1) for i in range(1, n)], kind="dag")
    if kind == "complete":
        return Digraph(verts, [(u, v) for u in verts for v in verts if u != v])
    if kind == "random-digraph":
        edges = [(u, v) for u in verts for v in verts if u != v and rng.random() < pf]
        return Digraph(verts, edges)
    if kind == "random-strongly-connected":
        perm = list(verts)
        rng.shuffle(perm)
        edges = set()
        if n > 1:
            edges = {(perm[i], perm[(i + 1) % n]) for i in range(n)}
        for u in verts:
            for v in verts:
                if u != v and (u, v) not in edges and rng.random() < pf:
                    edges.add((u, v))
        return Digraph(verts, sorted(edges))
    # random-dag
    perm = list(verts)
    rng.shuffle(perm)
    edges: dict[tuple[int, int], int | None] = {}
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < pf:
                edges[(perm[i], perm[j])] = rng.randint(1, wmax) if wmax else None
    return Digraph(verts, edges, weighted=wmax is not None, kind="dag")


# ---------------------------------------------------------------------------
# fixtures


def fixture(name: str) -> Digraph:
    if name == "p3":
        return Digraph([1, 2, 3], [(1, 2), (2, 3)], kind="dag")
    if name == "diamond":
        labels = {1: "s", 2: "a", 3: "b", 4: "t"}
        return Digraph(labels, [(1, 2), (1, 3), (2, 4), (3, 4)], kind="dag", labels=labels)
    if name == "fig2-congestion":
        names = ["s", "u1", "u2", "u3", "u4", "u5", "v", "w"]
        ids = {nm: i + 1 for i, nm in enumerate(names)}
        pairs = [
            ("s", "u1"), ("u1", "u2"), ("u2", "u3"), ("u3", "u4"), ("u4", "u5"),
            ("s", "v"), ("v", "u1"), ("s", "w"), ("w", "u4"),
        ]
        return Digraph(
            ids.values(),
            [(ids[a], ids[b]) for a, b in pairs],
            labels={i: nm for nm, i in ids.items()},
        )
    if name == "fig1-llt":
        # long chain s=x0 -> ... -> u(4) -> v(5) -> ... -> w(8) of heavy edges,
        # with light shortcuts u->v, u->w, v->w carrying the shortest paths
        names = ["s", "x1", "x2", "x3", "u", "v", "y1", "y2", "w"]
        ids = {nm: i + 1 for i, nm in enumerate(names)}
        chain = list(zip(names, names[1:]))
        edges: dict[tuple[int, int], int] = {}
        for a, b in chain:
            edges[(ids[a], ids[b])] = 5
        edges[(ids["u"], ids["v"])] = 1
        edges[(ids["u"], ids["w"])] = 3
        edges[(ids["v"], ids["w"])] = 2
        return Digraph(
            ids.values(), edges, weighted=True, kind="dag", labels={i: nm for nm, i in ids.items()}
        )
    raise GraphError(f"unknown fixture {name!r}; choose from {', '.join(FIXTURES)}")
