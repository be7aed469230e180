"""Echo-based spanning tree over the bidirectional channels.

A wave of ``BfsToken`` floods from the root; each node answers every token
either with its own token (non-tree edge) or, once all its other neighbors
have answered, with a ``ConvergecastCount`` to its parent carrying its
subtree size.  In synchronous rounds the wave moves one hop per round, so
the tree is a BFS tree of the undirected network.  When the root has heard
from everyone it knows ``n`` and pushes ``NBroadcast`` down the tree.

With ``extinction`` every node starts its own wave and a node defects to any
wave with a smaller root id; only the minimum-id wave completes.
"""
from __future__ import annotations

from .engine import BfsToken, ConvergecastCount, NBroadcast


class EchoTree:
    def __init__(self, vid: int, neighbors, *, initiator: bool, broadcast_n: bool = True):
        self.vid = vid
        self.neighbors = tuple(neighbors)
        self.initiator = initiator
        self.broadcast_n = broadcast_n
        self.root: int | None = None
        self.parent: int | None = None
        self.depth: int | None = None
        self.children: set[int] = set()
        self.pending: set[int] = set()
        self.count = 0
        self.reported = False
        self.complete_round: int | None = None  # round the children set became final
        self.n: int | None = None
        self.n_round: int | None = None

    @property
    def children_known(self) -> bool:
        return self.complete_round is not None

    def _adopt(self, root: int, parent: int | None, depth: int, out) -> None:
        self.root, self.parent, self.depth = root, parent, depth
        self.children = set()
        self.count = 1
        self.reported = False
        self.complete_round = None
        self.pending = {u for u in self.neighbors if u != parent}
        for u in self.pending:
            out.setdefault(u, []).append(BfsToken(depth, root))

    def step(self, r: int, received, out) -> None:
        """Consume this round's tree payloads ``received`` = [(sender, payload)], append sends to ``out``."""
        if r == 1 and self.initiator:
            self._adopt(self.vid, None, 0, out)
        tokens = [(u, p) for u, p in received if isinstance(p, BfsToken)]
        if tokens:
            best = min(p.root for _, p in tokens)
            if self.root is None or best < self.root:
                parent = min(u for u, p in tokens if p.root == best)
                depth = next(p.depth for u, p in tokens if u == parent and p.root == best)
                self._adopt(best, parent, depth + 1, out)
            for u, p in tokens:
                if p.root == self.root and u != self.parent:
                    self.pending.discard(u)
        for u, p in received:
            if isinstance(p, ConvergecastCount) and p.root == self.root:
                self.children.add(u)
                self.count += p.size
                self.pending.discard(u)
            elif isinstance(p, NBroadcast) and u == self.parent and self.n is None:
                self._learn_n(p.n, r, out)
        if self.root is not None and not self.pending and not self.reported:
            self.reported = True
            self.complete_round = r
            if self.parent is None:
                if self.broadcast_n:
                    self._learn_n(self.count, r, out)
            else:
                out.setdefault(self.parent, []).append(ConvergecastCount(self.count, self.root))

    def _learn_n(self, n: int, r: int, out) -> None:
        self.n, self.n_round = n, r
        for c in sorted(self.children):
            out.setdefault(c, []).append(NBroadcast(n))
