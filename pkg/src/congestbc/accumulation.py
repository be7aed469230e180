"""Time-reversed dependency accumulation.

After a forward shortest-path phase that ended in round ``R``, node ``v``
handles source ``s`` in round ``A_sv = R - tau_sv`` where ``tau_sv`` is the
round ``v`` forwarded its final (distance, count) for ``s``.  Every successor
of ``v`` in the shortest-path dag of ``s`` forwarded strictly later, so it
accumulates strictly earlier, and its contribution is in ``v``'s inbox by
round ``A_sv``.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .engine import AccumValue, RunMetrics, run_synchronous, BandwidthExceeded
from .graph import Digraph


@dataclass(frozen=True)
class SourceRow:
    """What node ``v`` kept about one source after the forward phase."""

    sigma: int | float
    preds: frozenset
    tau: int


class AccumNode:
    def __init__(self, vid: int, rows: dict[int, SourceRow], R: int, *, floats: bool = False):
        self.vid = vid
        self.rows = {s: row for s, row in rows.items() if s != vid}
        self.R = R
        # float mode ships and accumulates binary64 values; otherwise everything is exact
        self.num = float if floats else Fraction
        self.delta = {s: self.num(0) for s in self.rows}
        self.schedule: dict[int, int] = {}
        for s, row in self.rows.items():
            a = R - row.tau
            if a < 1:
                raise ValueError(f"accumulation round {a} for source {s} at {vid}: R too small")
            if a in self.schedule:
                raise AssertionError(
                    f"node {vid}: sources {self.schedule[a]} and {s} share accumulation round {a}"
                )
            self.schedule[a] = s
        self.last = max(self.schedule, default=0)
        self._halted = False
        self.late: list[tuple[int, int, int]] = []

    def on_round(self, r, inbox):
        for u, bundle in inbox.items():
            for p in bundle:
                if isinstance(p, AccumValue) and p.s in self.rows:
                    if r > self.R - self.rows[p.s].tau:
                        self.late.append((r, u, p.s))
                    self.delta[p.s] += self.num(self.rows[p.s].sigma) * p.m
        out = {}
        s = self.schedule.get(r)
        if s is not None:
            row = self.rows[s]
            m = (1 + self.delta[s]) / self.num(row.sigma)
            for u in sorted(row.preds):
                out.setdefault(u, []).append(AccumValue(s, m))
        if r >= self.last:
            self._halted = True
        return out

    def halted(self):
        return self._halted


def run_accumulation(
    g: Digraph,
    rows: dict[int, dict[int, SourceRow]],
    R: int,
    *,
    sigma_mode: str = "exact",
    enforce: int | None = None,
    virtual=(),
    order=None,
):
    """Returns ``(bc, delta_table, metrics, nodes)``; ``delta_table[s][v]``.

    With ``sigma_mode="float"`` the accumulated values are floats rather than
    ``Fraction``, so every payload has a fixed width.
    """
    floats = sigma_mode == "float"
    nodes = {v: AccumNode(v, rows.get(v, {}), R, floats=floats) for v in g.vertices}
    res = run_synchronous(
        g, nodes, max_rounds=R + 1, enforce=enforce, sigma_mode=sigma_mode,
        virtual=virtual, order=order,
    )
    if res.metrics.aborted:
        raise BandwidthExceeded(res.metrics)
    late = [x for nd in nodes.values() for x in nd.late]
    if late:
        raise AssertionError(f"accumulation values arrived after their use: {late[:5]}")
    real = [v for v in g.vertices if v not in set(virtual)]
    zero = 0.0 if floats else Fraction(0)
    bc = {v: sum(nodes[v].delta.values(), zero) for v in real}
    table: dict[int, dict[int, Fraction]] = {}
    for v in real:
        for s, d in nodes[v].delta.items():
            table.setdefault(s, {})[v] = d
    return bc, table, res.metrics, nodes
