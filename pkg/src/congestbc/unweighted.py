"""Pipelined directed APSP, diameter finalizer and BC for unweighted digraphs.

Each node keeps a list of (distance, source) entries in lexicographic order.
The entry at 1-based position ``k`` with distance ``d`` is forwarded on the
out-edges in round ``d + k`` and in no other round; that single rule replaces
any per-entry ready/sent bookkeeping.

Engine round ``r`` first absorbs the triples sent in round ``r - 1`` and then
applies the send rule for round ``r``.
"""
from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from fractions import Fraction

from .accumulation import SourceRow, run_accumulation
from .engine import (
    ApspTriple,
    BandwidthExceeded,
    BfsToken,
    ConvergecastCount,
    DiameterDown,
    FinalizerUp,
    NBroadcast,
    RunMetrics,
    run_synchronous,
)
from .graph import INF, Digraph, GraphError, bfs_hops
from .oracle import ApspSolution
from .tree import EchoTree

TREE_PAYLOADS = (BfsToken, ConvergecastCount, NBroadcast)


@dataclass
class Entry:
    d: int
    sigma: int | float
    preds: set = field(default_factory=set)
    tau: int | None = None
    hops: int = 0


class PipelineList:
    """Lexicographically sorted (d, s) entries, at most one per source."""

    def __init__(self):
        self.keys: list[tuple[int, int]] = []
        self.entries: dict[int, Entry] = {}

    def __len__(self):
        return len(self.keys)

    def __contains__(self, s):
        return s in self.entries

    def rank(self, s: int) -> int:
        e = self.entries[s]
        return bisect.bisect_left(self.keys, (e.d, s)) + 1

    def insert(self, s: int, entry: Entry) -> int:
        if s in self.entries:
            old = self.entries[s]
            self.keys.pop(bisect.bisect_left(self.keys, (old.d, s)))
        self.entries[s] = entry
        bisect.insort(self.keys, (entry.d, s))
        return self.rank(s)

    def drop(self, s: int) -> None:
        e = self.entries.pop(s)
        self.keys.pop(bisect.bisect_left(self.keys, (e.d, s)))

    def ranks(self) -> dict[int, int]:
        return {s: i + 1 for i, (_, s) in enumerate(self.keys)}

    def max_send_round(self) -> int:
        return max(d + i + 1 for i, (d, _) in enumerate(self.keys))

    def items(self):
        for d, s in self.keys:
            yield s, self.entries[s]


def apsp_send_rule(L: PipelineList, r: int, *, hop_limit: int | None = None) -> ApspTriple | None:
    """The triple whose entry satisfies ``r = d + rank``, stamping its send round."""
    hits = [(d, s) for i, (d, s) in enumerate(L.keys) if d + i + 1 == r]
    if len(hits) > 1:
        raise AssertionError(f"entries {hits} all qualify for round {r}")
    if not hits:
        return None
    d, s = hits[0]
    e = L.entries[s]
    if e.tau is not None:
        raise AssertionError(f"source {s} qualifies again in round {r} (sent in {e.tau})")
    e.tau = r
    if hop_limit is not None:
        if e.hops >= hop_limit:
            return None
        return ApspTriple(d, s, e.sigma, e.hops)
    return ApspTriple(d, s, e.sigma)


def apsp_receive_rule(L: PipelineList, u: int, t: ApspTriple) -> tuple[str, int | None]:
    """Fold one received triple into ``L``; returns (case, new rank or None)."""
    d = t.d + 1
    hops = (t.hops if t.hops is not None else t.d) + 1
    cur = L.entries.get(t.s)
    if cur is None:
        return "insert", L.insert(t.s, Entry(d, t.sigma, {u}, hops=hops))
    if cur.d == d:
        cur.sigma += t.sigma
        cur.preds.add(u)
        return "merge", None
    if cur.d > d:
        return "replace", L.insert(t.s, Entry(d, t.sigma, {u}, hops=hops))
    return "ignore", None


class ApspNode:
    """Pipelined APSP plus, optionally, tree building, n counting and the finalizer."""

    ROOT = 1

    def __init__(
        self,
        vid: int,
        g: Digraph,
        *,
        n: int | None,
        with_finalizer: bool,
        sigma_mode: str = "exact",
        strict: bool = True,
        piggyback: bool | None = None,
    ):
        self.vid = vid
        self.out = g.out_neighbors(vid)
        self.ins = frozenset(g.in_neighbors(vid))
        self.n = n
        self.with_finalizer = with_finalizer
        self.strict = strict
        self.L = PipelineList()
        one = 1.0 if sigma_mode == "float" else 1
        self.L.insert(vid, Entry(0, one))
        need_tree = with_finalizer or n is None
        self.tree = (
            EchoTree(vid, g.neighbors(vid), initiator=vid == self.ROOT, broadcast_n=n is None)
            if need_tree
            else None
        )
        # finalizer state
        self.flag = False
        self.child_reports: dict[int, int] = {}
        self.D: int | None = None
        self.leaf_fired: tuple[int, int] | None = None  # (fire round, max send round)
        # logs for invariant checks
        self.insert_log: list[tuple[int, int, int, int]] = []  # (send round of the triple, s, d, rank)
        self.send_log: list[tuple[int, int, int]] = []  # (round, s, d)
        self.violations: list[str] = []
        self._prev_ranks: dict[int, tuple[int, int]] = {}
        self._halted = False
        self.out_set = frozenset(self.out)
        self.piggyback = with_finalizer if piggyback is None else piggyback
        self._held: dict[int, list] = {}

    # -- helpers

    def _violate(self, msg: str):
        self.violations.append(msg)
        if self.strict:
            raise AssertionError(f"node {self.vid}: {msg}")

    def known_n(self) -> int | None:
        if self.n is not None:
            return self.n
        return self.tree.n if self.tree else None

    def on_round(self, r, inbox):
        out: dict[int, list] = {}
        tree_msgs = []
        for u, bundle in inbox.items():
            for p in bundle:
                if isinstance(p, ApspTriple):
                    if u not in self.ins:
                        raise AssertionError(f"triple from non in-neighbor {u}")
                    case, k = apsp_receive_rule(self.L, u, p)
                    if k is not None:
                        # the triple was sent, and so counts as received, in round r - 1
                        self.insert_log.append((r - 1, p.s, p.d + 1, k))
                        if p.d + 1 + k <= r - 1:
                            self._violate(f"entry ({p.d + 1},{p.s}) placed at rank {k} in round {r - 1}")
                elif isinstance(p, TREE_PAYLOADS):
                    tree_msgs.append((u, p))
                elif isinstance(p, FinalizerUp):
                    self.child_reports[u] = p.dstar
                elif isinstance(p, DiameterDown):
                    if self.tree and u == self.tree.parent and self.D is None:
                        self.D = p.D
        self._check_ranks(r)
        if self.tree is not None:
            self.tree.step(r, tree_msgs, out)

        t = apsp_send_rule(self.L, r)
        if t is not None:
            if self.send_log and self.send_log[-1][2] > t.d:
                self._violate(f"sent distance {t.d} after {self.send_log[-1][2]}")
            self.send_log.append((r, t.s, t.d))
            for w in self.out:
                out.setdefault(w, []).append(t)

        if self.with_finalizer:
            self._finalize(r, out)
        else:
            n = self.known_n()
            if n is not None and r >= 2 * n:
                self._halted = True
        return self._piggyback(r, out, t)

    def _piggyback(self, r, out, t):
        """Let control payloads wait one round for a triple due on the same channel.

        When tree or finalizer payloads would travel alone on an out-edge whose
        next triple leaves in round ``r + 1``, they ride along with that triple
        instead.  Used only with the finalizer: on sparse graphs (a long cycle
        has m = n) it is what keeps the control traffic within 4m messages.
        """
        held, self._held = self._held, {}
        for w, ps in held.items():
            out[w] = ps + out.get(w, [])
        if self._halted or not self.piggyback:
            return out
        due_next = any(d + i + 1 == r + 1 for i, (d, _) in enumerate(self.L.keys))
        if not due_next:
            return out
        for w in list(out):
            if w in self.out_set and w not in held and t is None:
                self._held[w] = out.pop(w)
        return out

    def _check_ranks(self, r):
        now = {s: (self.L.entries[s].d, k) for s, k in self.L.ranks().items()}
        for s, (d, k) in now.items():
            prev = self._prev_ranks.get(s)
            if prev is not None and prev[0] == d and k < prev[1]:
                self._violate(f"rank of ({d},{s}) fell from {prev[1]} to {k} by round {r}")
        self._prev_ranks = now

    def _finalize(self, r, out):
        tree = self.tree
        if self.D is not None:
            # learned the diameter from the parent this round
            for c in sorted(tree.children):
                out.setdefault(c, []).append(DiameterDown(self.D))
            self._halted = True
            return
        n = self.known_n()
        if self.flag or n is None or not tree.children_known:
            return
        if len(self.L) == n:
            top = self.L.max_send_round()
            if r < top:
                return
            local = max(e.d for _, e in self.L.items())
        elif r >= 2 * n:
            # no triple moves after round 2n - 1, so this node will never see every source
            top, local = None, INF
        else:
            return
        if set(self.child_reports) != tree.children:
            return
        if not tree.children and top is not None:
            self.leaf_fired = (r, top)
        best = max([local, *self.child_reports.values()])
        self.flag = True
        if tree.parent is None:
            self.D = best
            for c in sorted(tree.children):
                out.setdefault(c, []).append(DiameterDown(best))
            self._halted = True
        else:
            out.setdefault(tree.parent, []).append(FinalizerUp(best))

    def halted(self):
        return self._halted


@dataclass
class ApspRun:
    solution: ApspSolution
    tau: dict[tuple[int, int], int]  # (v, s) -> send round
    diameter: int | None
    metrics: RunMetrics
    nodes: dict[int, ApspNode]

    def violations(self) -> list[str]:
        return [f"{v}: {msg}" for v, nd in self.nodes.items() for msg in nd.violations]


def _require_standard(g: Digraph):
    if not g.has_standard_ids():
        raise GraphError("vertex ids must be 1..n")
    if g.weighted and any(g.weight(u, v) != 1 for u, v in g.edges):
        raise GraphError("pipelined APSP handles unweighted graphs only")


def run_directed_apsp(
    g: Digraph,
    know_n: bool = True,
    with_finalizer: bool = False,
    *,
    sigma_mode: str = "exact",
    enforce: int | None = None,
    order=None,
    strict: bool = True,
) -> ApspRun:
    _require_standard(g)
    if not know_n and len(bfs_hops(g, 1, undirected=True)) != g.n:
        raise GraphError("computing n needs a weakly connected graph")
    n = g.n
    nodes = {
        v: ApspNode(v, g, n=n if know_n else None, with_finalizer=with_finalizer,
                    sigma_mode=sigma_mode, strict=strict)
        for v in g.vertices
    }
    res = run_synchronous(
        g, nodes, max_rounds=12 * n + 16, enforce=enforce, sigma_mode=sigma_mode, order=order
    )
    if res.metrics.aborted:
        raise BandwidthExceeded(res.metrics)
    if not res.metrics.all_halted:
        raise RuntimeError("directed APSP did not terminate")
    sol = ApspSolution()
    zero = 0.0 if sigma_mode == "float" else 0
    for s in g.vertices:
        sol.dist[s], sol.sigma[s], sol.preds[s] = {}, {}, {}
        for v in g.vertices:
            e = nodes[v].L.entries.get(s)
            sol.dist[s][v] = e.d if e else INF
            sol.sigma[s][v] = e.sigma if e else zero
            sol.preds[s][v] = frozenset(e.preds) if e else frozenset()
    tau = {(v, s): e.tau for v in g.vertices for s, e in nodes[v].L.items()}
    diameter = None
    if with_finalizer:
        learned = {nd.D for nd in nodes.values()}
        if len(learned) == 1 and None not in learned:
            diameter = learned.pop()
    return ApspRun(sol, tau, diameter, res.metrics, nodes)


@dataclass
class BcRun:
    bc: dict[int, Fraction]
    dependencies: dict[int, dict[int, Fraction]]
    forward: ApspRun
    accumulation: RunMetrics
    metrics: RunMetrics


def rows_from_forward(nodes, sources_of) -> dict[int, dict[int, SourceRow]]:
    rows = {}
    for v, nd in nodes.items():
        rows[v] = {
            s: SourceRow(e.sigma, frozenset(e.preds), e.tau)
            for s, e in sources_of(nd)
        }
    return rows


def run_bc(
    g: Digraph,
    know_n: bool = True,
    with_finalizer: bool | None = None,
    *,
    sigma_mode: str = "exact",
    enforce: int | None = None,
    order=None,
) -> BcRun:
    """Directed APSP, then accumulation clocked from the measured forward end round."""
    if with_finalizer is None:
        with_finalizer = not know_n
    fwd = run_directed_apsp(
        g, know_n, with_finalizer, sigma_mode=sigma_mode, enforce=enforce, order=order
    )
    R = fwd.metrics.rounds_elapsed
    rows = rows_from_forward(fwd.nodes, lambda nd: nd.L.items())
    bc, table, acc, _ = run_accumulation(
        g, rows, R, sigma_mode=sigma_mode, enforce=enforce, order=order
    )
    return BcRun(bc, table, fwd, acc, fwd.metrics.then(acc))


# ---------------------------------------------------------------------------
# source detection and (h,k)-SSP


class SourceDetectNode:
    def __init__(self, vid, g, *, is_source: bool, h: int, keep: int | None, stop: int):
        self.vid = vid
        self.out = g.out_neighbors(vid)
        self.h, self.keep, self.stop = h, keep, stop
        self.L = PipelineList()
        if is_source:
            self.L.insert(vid, Entry(0, 1, hops=0))
        self.last_change = 0
        self._halted = False

    def on_round(self, r, inbox):
        before = list(self.L.keys)
        for u, bundle in inbox.items():
            for p in bundle:
                if not isinstance(p, ApspTriple) or p.hops + 1 > self.h:
                    continue
                apsp_receive_rule(self.L, u, p)
        if self.keep is not None:
            while len(self.L) > self.keep:
                self.L.drop(self.L.keys[-1][1])
        if self.L.keys != before:
            self.last_change = r
        out = {}
        t = apsp_send_rule(self.L, r, hop_limit=self.h)
        if t is not None:
            for w in self.out:
                out.setdefault(w, []).append(t)
        if r >= self.stop:
            self._halted = True
        return out

    def halted(self):
        return self._halted

    def result(self) -> list[tuple[int, int]]:
        return list(self.L.keys)


@dataclass
class DetectionRun:
    lists: dict[int, list[tuple[int, int]]]  # v -> [(d, s)] lexicographic
    stable_round: int
    metrics: RunMetrics


def _detect(g, S, h, keep, stop, enforce=None):
    S = set(S)
    if not S or not S <= set(g.vertices):
        raise GraphError("source set must be a nonempty subset of the vertices")
    if h < 1:
        raise GraphError("hop bound must be at least 1")
    nodes = {
        v: SourceDetectNode(v, g, is_source=v in S, h=h, keep=keep, stop=stop) for v in g.vertices
    }
    res = run_synchronous(g, nodes, max_rounds=stop, enforce=enforce, hop_bound=h)
    if res.metrics.aborted:
        raise BandwidthExceeded(res.metrics)
    lists = {v: nd.result() for v, nd in nodes.items()}
    stable = max(nd.last_change for nd in nodes.values())
    return DetectionRun(lists, stable, res.metrics)


def source_detection(g: Digraph, S, h: int, r: int, *, enforce: int | None = None) -> DetectionRun:
    """Each node learns its ``r`` lexicographically nearest sources within ``h`` hops."""
    if not 1 <= r <= len(set(S)):
        raise GraphError("need 1 <= r <= |S|")
    return _detect(g, S, h, r, r + h, enforce)


def hk_ssp(g: Digraph, S, h: int, *, enforce: int | None = None) -> DetectionRun:
    """Each node learns its distance from every source within ``h`` hops."""
    k = len(set(S))
    return _detect(g, S, h, None, k + h, enforce)


def truncated_bfs_oracle(g: Digraph, S, h: int, r: int | None) -> dict[int, list[tuple[int, int]]]:
    found = {v: [] for v in g.vertices}
    for s in sorted(set(S)):
        for v, d in bfs_hops(g, s).items():
            if d <= h:
                found[v].append((d, s))
    return {v: sorted(lst)[:r] if r is not None else sorted(lst) for v, lst in found.items()}


# ---------------------------------------------------------------------------
# naive simultaneous BFS (the congestion counterexample)


class NaiveBfsNode:
    """Starts its own BFS at a fixed round and forwards every wave the round it arrives."""

    def __init__(self, vid, g, start: int | None, stop: int):
        self.vid = vid
        self.out = g.out_neighbors(vid)
        self.start, self.stop = start, stop
        self.dist = {vid: 0}
        self._halted = False

    def on_round(self, r, inbox):
        fresh: dict[int, list] = {}
        for u, bundle in inbox.items():
            for p in bundle:
                if isinstance(p, ApspTriple) and p.s not in self.dist:
                    fresh.setdefault(p.s, []).append(p)
        sends = []
        for s, ps in sorted(fresh.items()):
            self.dist[s] = ps[0].d + 1
            sends.append(ApspTriple(ps[0].d + 1, s, sum(p.sigma for p in ps)))
        if r == self.start:
            sends.append(ApspTriple(0, self.vid, 1))
        if r >= self.stop:
            self._halted = True
        return {w: list(sends) for w in self.out} if sends else {}

    def halted(self):
        return self._halted


def naive_simultaneous_bfs(g: Digraph, starts: dict[int, int], *, enforce: int | None = None):
    stop = max(starts.values()) + g.n + 1
    nodes = {v: NaiveBfsNode(v, g, starts.get(v), stop) for v in g.vertices}
    return run_synchronous(g, nodes, max_rounds=stop, enforce=enforce)
