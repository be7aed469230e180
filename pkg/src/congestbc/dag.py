"""APSP and BC on weighted dags, scheduled by longest-length levels.

Every vertex ``y`` gets a level ``l(y)``, the edge count of a longest path
reaching it, so each edge climbs at least one level.  The single-source
shortest path computation of source ``x`` is handled by ``y`` exactly in
round ``x + l(y)``: by then every in-neighbor has already forwarded its
value for ``x``, and no two sources ever share a round at the same node.

The level computation and the shortest path schedule run on one clock.  A
vertex of level ``l`` learns its level in round ``l + 1`` and its first
scheduled round is ``1 + l``, so no global restart is needed.  On a dag with
several sources every in-degree-0 vertex starts at level 0, which is what a
virtual source feeding all of them would give after dropping its own level.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .accumulation import SourceRow, run_accumulation
from .engine import (
    BandwidthExceeded,
    DagSsspTriple,
    IdAssign,
    IdReport,
    LltLevel,
    RunMetrics,
    run_synchronous,
)
from .graph import INF, Digraph, GraphError, bfs_hops, topological_order
from .oracle import ApspSolution
from .tree import EchoTree

VIRTUAL_SOURCE = 0


def _require_dag(g: Digraph) -> None:
    if topological_order(g) is None:
        raise GraphError("graph has a cycle")


def add_virtual_source(g: Digraph) -> tuple[Digraph, int]:
    """Attach a virtual source (id 0, unit-weight edges) when ``g`` has several sources."""
    _require_dag(g)
    sources = [v for v in g.vertices if not g.in_neighbors(v)]
    if len(sources) == 1:
        return g, sources[0]
    if VIRTUAL_SOURCE in g.vertices:
        raise GraphError(f"vertex id {VIRTUAL_SOURCE} is reserved for the virtual source")
    edges = {e: g.weight(*e) for e in g.edges}
    for s in sources:
        edges[(VIRTUAL_SOURCE, s)] = 1
    labels = dict(g.labels)
    labels[VIRTUAL_SOURCE] = "s^"
    g2 = Digraph((VIRTUAL_SOURCE, *g.vertices), edges, weighted=g.weighted, kind="dag", labels=labels)
    return g2, VIRTUAL_SOURCE


# ---------------------------------------------------------------------------
# longest-length levels (delayed BFS)


class LltState:
    """Level bookkeeping for one vertex: it broadcasts only after its last in-neighbor spoke."""

    def __init__(self, vid: int, ins, *, root: bool):
        self.vid = vid
        self.ins = frozenset(ins)
        self.root = root
        self.heard: set[int] = set()
        self.best = 0
        self.parent: int | None = None
        self.level: int | None = None
        self.level_round: int | None = None

    def step(self, r: int, received) -> bool:
        """Feed ``[(u, level)]``; True in the round the level becomes final."""
        if self.level is not None:
            return False
        for u, lv in received:
            if u not in self.ins:
                raise AssertionError(f"level from non in-neighbor {u} at {self.vid}")
            self.heard.add(u)
            if lv + 1 > self.best:
                self.best, self.parent = lv + 1, u
        if (self.root and r == 1) or (self.ins and self.heard == self.ins):
            self.level = 0 if self.root else self.best
            self.level_round = r
            return True
        return False


class LltNode:
    def __init__(self, vid: int, g: Digraph, *, root: bool):
        self.out = g.out_neighbors(vid)
        self.state = LltState(vid, g.in_neighbors(vid), root=root)
        self._halted = False

    def on_round(self, r, inbox):
        got = [(u, p.level) for u, b in inbox.items() for p in b if isinstance(p, LltLevel)]
        out = {}
        if self.state.step(r, got):
            out = {w: [LltLevel(self.state.level)] for w in self.out}
            self._halted = True
        return out

    def halted(self):
        return self._halted


@dataclass
class LltResult:
    levels: dict[int, int]
    parents: dict[int, int | None]
    rounds: int  # rounds that carried level messages
    metrics: RunMetrics


def llt_build(g: Digraph, s: int, *, virtual=(), enforce: int | None = None) -> LltResult:
    """Delayed BFS from ``s``.  A vertex not reachable from ``s`` never fires and is reported."""
    _require_dag(g)
    if s not in g.vertices:
        raise GraphError(f"unknown source {s}")
    nodes = {v: LltNode(v, g, root=v == s) for v in g.vertices}
    res = run_synchronous(g, nodes, max_rounds=g.n + 1, virtual=virtual, enforce=enforce)
    if res.metrics.aborted:
        raise BandwidthExceeded(res.metrics)
    stuck = sorted(v for v, nd in nodes.items() if nd.state.level is None)
    if stuck:
        raise GraphError(f"no level after {g.n + 1} rounds (unreachable from {s}): {stuck}")
    levels = {v: nd.state.level for v, nd in nodes.items()}
    parents = {v: nd.state.parent for v, nd in nodes.items()}
    return LltResult(levels, parents, res.metrics.last_message_round, res.metrics)


# ---------------------------------------------------------------------------
# id relabeling


class RelabelNode:
    """Elect the minimum id, gather all ids at it, and pipeline the new names back.

    Every vertex starts an echo wave; a vertex defects to any wave with a
    smaller root, so only the minimum-id wave completes and its root learns
    ``n``.  Ids climb each wave's tree one per channel per round while the wave
    is still spreading, tagged with the wave's root so that leftovers of dead
    waves are dropped.  The surviving root sorts what it gathered and streams
    ``(old, new)`` pairs down its tree.
    """

    def __init__(self, vid: int, g: Digraph):
        self.vid = vid
        self.tree = EchoTree(vid, g.neighbors(vid), initiator=True, broadcast_n=True)
        self.up: list[int] = []
        self.collected: list[int] = []
        self.down: list[IdAssign] = []
        self.forwarded = 0
        self.mapping: dict[int, int] = {}
        self.new_id: int | None = None
        self._assigned = False
        self._halted = False

    def on_round(self, r, inbox):
        out: dict[int, list] = {}
        tree_msgs, reports = [], []
        for u, bundle in inbox.items():
            for p in bundle:
                if isinstance(p, IdReport):
                    reports.append(p)
                elif isinstance(p, IdAssign):
                    if u == self.tree.parent:
                        self._learn(p)
                else:
                    tree_msgs.append((u, p))
        t = self.tree
        wave = t.root
        t.step(r, tree_msgs, out)
        if t.root != wave:
            # joined a new wave: everything gathered for the old one is void
            self.up = [self.vid]
            self.collected = []
        self.up.extend(p.vid for p in reports if p.root == t.root)
        if t.parent is None:
            self.collected.extend(self.up)
            self.up.clear()
            if t.n is not None and not self._assigned and len(self.collected) == t.n:
                self._assigned = True
                for new, old in enumerate(sorted(self.collected), start=1):
                    self._learn(IdAssign(old, new))
        elif self.up:
            out.setdefault(t.parent, []).append(IdReport(self.up.pop(0), t.root))
        if self.down:
            p = self.down.pop(0)
            for c in sorted(t.children):
                out.setdefault(c, []).append(p)
            self.forwarded += 1
        if t.n is not None and self.forwarded == t.n and not self.up:
            self._halted = True
        return out

    def _learn(self, p: IdAssign) -> None:
        self.mapping[p.old] = p.new
        if p.old == self.vid:
            self.new_id = p.new
        self.down.append(p)

    def halted(self):
        return self._halted


@dataclass
class RelabelResult:
    graph: Digraph
    mapping: dict[int, int]  # old id -> new id
    metrics: RunMetrics


def relabel_ids(g: Digraph, *, enforce: int | None = None) -> RelabelResult:
    """Rename vertices to 1..n in increasing id order by a simulated message-passing phase."""
    if len(bfs_hops(g, g.vertices[0], undirected=True)) != g.n:
        raise GraphError("relabeling needs a weakly connected graph")
    nodes = {v: RelabelNode(v, g) for v in g.vertices}
    res = run_synchronous(g, nodes, max_rounds=8 * g.n + 8, enforce=enforce)
    if res.metrics.aborted:
        raise BandwidthExceeded(res.metrics)
    if not res.metrics.all_halted:
        raise RuntimeError("relabeling did not terminate")
    mapping = {v: nd.new_id for v, nd in nodes.items()}
    expected = {old: new for new, old in enumerate(g.vertices, start=1)}
    if mapping != expected or any(nd.mapping != expected for nd in nodes.values()):
        raise AssertionError("relabeling produced an inconsistent table")
    edges = {(mapping[u], mapping[v]): g.weight(u, v) for u, v in g.edges}
    labels = {mapping[v]: g.label(v) for v in g.vertices}
    g2 = Digraph(range(1, g.n + 1), edges, weighted=g.weighted, kind=g.kind, labels=labels)
    return RelabelResult(g2, mapping, res.metrics)


# ---------------------------------------------------------------------------
# scheduled APSP


@dataclass
class DagRow:
    dist: float
    sigma: int | float
    preds: frozenset
    tau: int


class DagNode:
    """Levels, then one scheduled shortest-path step per source, all on one clock."""

    def __init__(self, vid: int, g: Digraph, *, n: int, sigma_mode: str = "exact"):
        self.vid = vid
        self.n = n
        self.out = g.out_neighbors(vid)
        self.win = {u: g.weight(u, vid) for u in g.in_neighbors(vid)}
        self.llt = LltState(vid, g.in_neighbors(vid), root=not g.in_neighbors(vid))
        self.one = 1.0 if sigma_mode == "float" else 1
        self.buffer: dict[int, list[tuple[int, int, int | float]]] = {}
        self.rows: dict[int, DagRow] = {}
        self.arrivals: list[tuple[int, int, int]] = []  # (round, source, sender)
        self.sent_sources: list[tuple[int, set]] = []  # (round, sources in the outbox)
        self.violations: list[str] = []
        self._halted = False

    @property
    def level(self) -> int | None:
        return self.llt.level

    def on_round(self, r, inbox):
        levels = []
        for u, bundle in inbox.items():
            for p in bundle:
                if isinstance(p, LltLevel):
                    levels.append((u, p.level))
                elif isinstance(p, DagSsspTriple):
                    if self.level is not None and r > p.x + self.level:
                        self.violations.append(f"source {p.x} from {u} arrived in round {r}, after its slot")
                    self.arrivals.append((r, p.x, u))
                    self.buffer.setdefault(p.x, []).append((u, p.delta, p.sigma))
        out: dict[int, list] = {}
        if self.llt.step(r, levels):
            for w in self.out:
                out.setdefault(w, []).append(LltLevel(self.level))
        if self.level is not None:
            x = r - self.level
            if 1 <= x <= self.n:
                t = self._process(x, r)
                if t is not None:
                    for w in self.out:
                        out.setdefault(w, []).append(t)
            if r >= self.n + self.level:
                self._halted = True
        srcs = {p.x for ps in out.values() for p in ps if isinstance(p, DagSsspTriple)}
        if srcs:
            self.sent_sources.append((r, srcs))
            if len(srcs) > 1:
                self.violations.append(f"round {r}: payloads of sources {sorted(srcs)}")
        return out

    def _process(self, x: int, r: int) -> DagSsspTriple | None:
        if x == self.vid:
            self.rows[x] = DagRow(0, self.one, frozenset(), r)
            return DagSsspTriple(x, 0, self.one)
        got = self.buffer.pop(x, [])
        if not got:
            return None
        d = min(delta + self.win[u] for u, delta, _ in got)
        preds = frozenset(u for u, delta, _ in got if delta + self.win[u] == d)
        sigma = sum((s for u, _, s in got if u in preds), 0.0 if isinstance(self.one, float) else 0)
        self.rows[x] = DagRow(d, sigma, preds, r)
        return DagSsspTriple(x, d, sigma)

    def halted(self):
        return self._halted


@dataclass
class DagRun:
    solution: ApspSolution
    tau: dict[tuple[int, int], int]  # (y, x) -> scheduled round
    levels: dict[int, int]
    metrics: RunMetrics  # all phases, relabeling included
    forward: RunMetrics  # the scheduled phase alone
    nodes: dict[int, DagNode]
    relabel: RelabelResult | None = None
    names: dict[int, int] = field(default_factory=dict)  # engine id -> caller's id

    def violations(self) -> list[str]:
        return [f"{v}: {msg}" for v, nd in self.nodes.items() for msg in nd.violations]


def _run_scheduled(g: Digraph, *, sigma_mode, enforce, order):
    n = g.n
    nodes = {v: DagNode(v, g, n=n, sigma_mode=sigma_mode) for v in g.vertices}
    res = run_synchronous(
        g, nodes, max_rounds=2 * n + 2, enforce=enforce, sigma_mode=sigma_mode, order=order
    )
    if res.metrics.aborted:
        raise BandwidthExceeded(res.metrics)
    if not res.metrics.all_halted:
        raise RuntimeError("dag APSP did not terminate")
    bad = [f"{v}: {m}" for v, nd in nodes.items() for m in nd.violations]
    if bad:
        raise AssertionError("; ".join(bad[:5]))
    return nodes, res.metrics


def run_dag_apsp(
    g: Digraph,
    know_n: bool = True,
    *,
    sigma_mode: str = "exact",
    enforce: int | None = None,
    order=None,
) -> DagRun:
    """Shortest distances, path counts and predecessor sets for every pair of a weighted dag.

    With ``know_n`` the ids must already be 1..n.  Otherwise a relabeling
    phase runs first (which also tells every vertex ``n``) and the results
    are reported under the original ids.
    """
    _require_dag(g)
    rel = None
    work = g
    if know_n:
        if not g.has_standard_ids():
            raise GraphError("vertex ids must be 1..n; run with know_n=False to relabel")
    else:
        rel = relabel_ids(g, enforce=enforce)
        work = rel.graph
        if order is not None:
            order = [rel.mapping[v] for v in order]
    nodes, fwd = _run_scheduled(work, sigma_mode=sigma_mode, enforce=enforce, order=order)
    names = {new: old for old, new in rel.mapping.items()} if rel else {v: v for v in g.vertices}
    zero = 0.0 if sigma_mode == "float" else 0
    sol = ApspSolution()
    for x in work.vertices:
        sx = names[x]
        sol.dist[sx], sol.sigma[sx], sol.preds[sx] = {}, {}, {}
        for y in work.vertices:
            row = nodes[y].rows.get(x)
            sy = names[y]
            sol.dist[sx][sy] = row.dist if row else INF
            sol.sigma[sx][sy] = row.sigma if row else zero
            sol.preds[sx][sy] = frozenset(names[u] for u in row.preds) if row else frozenset()
    tau = {(names[y], names[x]): row.tau for y in work.vertices for x, row in nodes[y].rows.items()}
    levels = {names[v]: nd.level for v, nd in nodes.items()}
    total = rel.metrics.then(fwd) if rel else fwd
    return DagRun(sol, tau, levels, total, fwd, nodes, rel, names)


@dataclass
class DagBcRun:
    bc: dict
    dependencies: dict
    forward: DagRun
    accumulation: RunMetrics
    metrics: RunMetrics


def run_dag_bc(
    g: Digraph,
    know_n: bool = True,
    *,
    sigma_mode: str = "exact",
    enforce: int | None = None,
    order=None,
) -> DagBcRun:
    """Scheduled dag APSP followed by time-reversed accumulation.

    The accumulation clock starts one round after the scheduled phase ends:
    a sink on the deepest level may be scheduled in that phase's very last
    round, and it still needs a slot of its own on the way back.
    """
    fwd = run_dag_apsp(g, know_n, sigma_mode=sigma_mode, enforce=enforce, order=order)
    work = fwd.relabel.graph if fwd.relabel else g
    rows = {
        v: {x: SourceRow(row.sigma, row.preds, row.tau) for x, row in nd.rows.items()}
        for v, nd in fwd.nodes.items()
    }
    R = fwd.forward.rounds_elapsed + 1
    if order is not None and fwd.relabel:
        order = [fwd.relabel.mapping[v] for v in order]
    bc, table, acc, _ = run_accumulation(
        work, rows, R, sigma_mode=sigma_mode, enforce=enforce, order=order
    )
    names = fwd.names
    bc = {names[v]: val for v, val in bc.items()}
    table = {names[s]: {names[v]: d for v, d in row.items()} for s, row in table.items()}
    return DagBcRun(bc, table, fwd, acc, fwd.metrics.then(acc))
