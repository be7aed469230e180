"""Round-synchronous CONGEST executor with per-channel bandwidth accounting.

A round ``r`` hands every live node the bundles sent to it in round ``r-1``,
collects the node's outbox, and delivers nothing until every node of the
round has been evaluated.  Channels exist in both directions over every
edge, so a node may address any of its communication neighbors.
"""
from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Protocol, Sequence, Union

from .graph import Digraph

log = logging.getLogger(__name__)

C_BUNDLE = 4
# Float mode ships sigma as a sign/exponent/53-bit-mantissa word; the width is
# FLOAT_SIGMA_C * ceil(log2 n), which is >= 64 bits for every n >= 2.
FLOAT_SIGMA_C = 64


# ---------------------------------------------------------------------------
# payloads


@dataclass(frozen=True, slots=True)
class ApspTriple:
    d: int
    s: int
    sigma: Union[int, float]
    hops: int | None = None


@dataclass(frozen=True, slots=True)
class BfsToken:
    depth: int
    root: int = 1


@dataclass(frozen=True, slots=True)
class ConvergecastCount:
    size: int
    root: int = 1


@dataclass(frozen=True, slots=True)
class NBroadcast:
    n: int


@dataclass(frozen=True, slots=True)
class FinalizerUp:
    dstar: int


@dataclass(frozen=True, slots=True)
class DiameterDown:
    D: int


@dataclass(frozen=True, slots=True)
class AccumValue:
    s: int
    m: Union[Fraction, float]


@dataclass(frozen=True, slots=True)
class DagSsspTriple:
    x: int
    delta: int
    sigma: Union[int, float]


@dataclass(frozen=True, slots=True)
class LltLevel:
    level: int


@dataclass(frozen=True, slots=True)
class IdReport:
    vid: int
    root: int


@dataclass(frozen=True, slots=True)
class IdAssign:
    old: int
    new: int


Payload = Union[
    ApspTriple, BfsToken, ConvergecastCount, NBroadcast, FinalizerUp, DiameterDown,
    AccumValue, DagSsspTriple, LltLevel, IdReport, IdAssign,
]
Bundle = tuple  # tuple[Payload, ...]
Inbox = Mapping[int, Bundle]
Outbox = Mapping[int, Sequence[Payload]]


# ---------------------------------------------------------------------------
# bit accounting


def id_bits(n: int) -> int:
    return max(1, (n - 1).bit_length())


def distance_bits(n: int, wmax: int = 1) -> int:
    # ceil(log2(n*wmax + 1))
    return max(1, (n * wmax).bit_length())


def sigma_bits(sigma: int | float, n: int, mode: str = "exact") -> int:
    if mode == "float":
        return FLOAT_SIGMA_C * id_bits(n)
    if mode != "exact":
        raise ValueError(f"unknown sigma mode {mode!r}")
    return max(1, int(sigma).bit_length())


def _nat_bits(x: int) -> int:
    return max(1, int(x).bit_length())


def payload_bits(
    p: Payload, n: int, mode: str = "exact", *, wmax: int = 1, hop_bound: int | None = None
) -> int:
    """Bit size of one logical payload on a network of ``n`` nodes."""
    ib, db = id_bits(n), distance_bits(n, wmax)
    if isinstance(p, ApspTriple):
        bits = db + ib + sigma_bits(p.sigma, n, mode)
        if p.hops is not None:
            bits += _nat_bits(hop_bound if hop_bound is not None else p.hops)
        return bits
    if isinstance(p, DagSsspTriple):
        return ib + db + sigma_bits(p.sigma, n, mode)
    if isinstance(p, AccumValue):
        if isinstance(p.m, float):
            return ib + FLOAT_SIGMA_C * ib
        return ib + _nat_bits(p.m.numerator) + _nat_bits(p.m.denominator)
    if isinstance(p, BfsToken):
        return ib + distance_bits(n)
    if isinstance(p, ConvergecastCount):
        return ib + distance_bits(n)
    if isinstance(p, (NBroadcast, LltLevel)):
        return distance_bits(n)
    if isinstance(p, (FinalizerUp, DiameterDown)):
        return db
    if isinstance(p, IdReport):
        return _nat_bits(p.vid) + _nat_bits(p.root)
    if isinstance(p, IdAssign):
        return _nat_bits(p.old) + ib
    raise TypeError(f"not a payload: {p!r}")


# ---------------------------------------------------------------------------
# node programs and metrics


class NodeProgram(Protocol):
    def on_round(self, r: int, inbox: Inbox) -> Outbox: ...

    def halted(self) -> bool: ...


@dataclass(frozen=True)
class Violation:
    round: int
    sender: int
    receiver: int
    bits: int
    payloads: int


@dataclass
class RunMetrics:
    rounds_elapsed: int = 0
    total_messages: int = 0
    total_payloads: int = 0
    max_bundle_bits: int = 0
    per_node_per_source_sends: Counter = field(default_factory=Counter)
    enforcing_violations: list[Violation] = field(default_factory=list)
    last_message_round: int = 0
    virtual_messages: int = 0
    all_halted: bool = False

    @property
    def aborted(self) -> bool:
        return bool(self.enforcing_violations)

    def then(self, later: "RunMetrics") -> "RunMetrics":
        """Metrics of two phases executed back to back."""
        sends = Counter(self.per_node_per_source_sends)
        sends.update(later.per_node_per_source_sends)
        return RunMetrics(
            rounds_elapsed=self.rounds_elapsed + later.rounds_elapsed,
            total_messages=self.total_messages + later.total_messages,
            total_payloads=self.total_payloads + later.total_payloads,
            max_bundle_bits=max(self.max_bundle_bits, later.max_bundle_bits),
            per_node_per_source_sends=sends,
            enforcing_violations=self.enforcing_violations + later.enforcing_violations,
            last_message_round=(
                self.rounds_elapsed + later.last_message_round
                if later.last_message_round
                else self.last_message_round
            ),
            virtual_messages=self.virtual_messages + later.virtual_messages,
            all_halted=self.all_halted and later.all_halted,
        )

    def to_json(self) -> dict:
        return {
            "rounds_elapsed": self.rounds_elapsed,
            "total_messages": self.total_messages,
            "total_payloads": self.total_payloads,
            "max_bundle_bits": self.max_bundle_bits,
            "last_message_round": self.last_message_round,
            "virtual_messages": self.virtual_messages,
            "all_halted": self.all_halted,
            "max_sends_per_node_source": max(self.per_node_per_source_sends.values(), default=0),
            "enforcing_violations": [
                {"round": v.round, "channel": [v.sender, v.receiver], "bits": v.bits, "payloads": v.payloads}
                for v in self.enforcing_violations
            ],
        }


class BandwidthExceeded(RuntimeError):
    """An enforce-mode run aborted; ``metrics`` records the offending channel."""

    def __init__(self, metrics: RunMetrics):
        v = metrics.enforcing_violations[0]
        super().__init__(
            f"bundle of {v.bits} bits / {v.payloads} payloads on channel "
            f"{v.sender}->{v.receiver} in round {v.round}"
        )
        self.metrics = metrics


@dataclass
class RunResult:
    programs: dict[int, NodeProgram]
    metrics: RunMetrics


def _source_of(p: Payload) -> int | None:
    if isinstance(p, ApspTriple):
        return p.s
    if isinstance(p, DagSsspTriple):
        return p.x
    return None


def run_synchronous(
    g: Digraph,
    programs: Mapping[int, NodeProgram],
    max_rounds: int,
    *,
    enforce: int | None = None,
    sigma_mode: str = "exact",
    wmax: int | None = None,
    hop_bound: int | None = None,
    order: Iterable[int] | None = None,
    virtual: Iterable[int] = (),
    n_bits: int | None = None,
) -> RunResult:
    """Execute ``programs`` in lockstep until all halt or ``max_rounds`` pass.

    ``enforce`` is a per-bundle bit budget B; a bundle above B bits or above
    ``C_BUNDLE`` payloads aborts the run after recording every violation of
    that round.  Traffic on channels touching a ``virtual`` vertex is tallied
    separately in ``virtual_messages``.
    """
    if set(programs) != set(g.vertices):
        raise ValueError("need exactly one program per vertex")
    if max_rounds < 1:
        raise ValueError("max_rounds must be at least 1")
    order = list(order) if order is not None else list(g.vertices)
    if sorted(order) != list(g.vertices):
        raise ValueError("order must be a permutation of the vertices")
    virtual = frozenset(virtual)
    n = n_bits if n_bits is not None else g.n
    wmax = wmax if wmax is not None else g.wmax
    nbrs = {v: frozenset(g.neighbors(v)) for v in g.vertices}
    bits_cache: dict[Payload, int] = {}

    def pbits(p: Payload) -> int:
        b = bits_cache.get(p)
        if b is None:
            b = bits_cache[p] = payload_bits(p, n, sigma_mode, wmax=wmax, hop_bound=hop_bound)
        return b

    metrics = RunMetrics()
    active = {v for v in order if not programs[v].halted()}
    inboxes: dict[int, dict[int, Bundle]] = {v: {} for v in order}
    r = 0
    while active and r < max_rounds:
        r += 1
        outboxes = {}
        for v in order:
            if v in active:
                outboxes[v] = programs[v].on_round(r, inboxes[v])
        delivered: dict[int, dict[int, Bundle]] = {v: {} for v in order}
        violations = []
        for v in order:
            out = outboxes.get(v)
            if not out:
                continue
            sources = set()
            for u, payloads in out.items():
                if not payloads:
                    continue
                if u not in nbrs[v]:
                    raise ValueError(f"node {v} addressed {u}, which is not a neighbor")
                bundle = tuple(payloads)
                bits = sum(pbits(p) for p in bundle)
                if v in virtual or u in virtual:
                    metrics.virtual_messages += 1
                else:
                    metrics.total_messages += 1
                    metrics.total_payloads += len(bundle)
                    metrics.max_bundle_bits = max(metrics.max_bundle_bits, bits)
                    for p in bundle:
                        s = _source_of(p)
                        if s is not None:
                            sources.add(s)
                metrics.last_message_round = r
                if enforce is not None and (bits > enforce or len(bundle) > C_BUNDLE):
                    violations.append(Violation(r, v, u, bits, len(bundle)))
                delivered[u][v] = bundle
            for s in sources:
                metrics.per_node_per_source_sends[(v, s)] += 1
        for v in order:
            if v in active and programs[v].halted():
                active.discard(v)
        if violations:
            violations.sort(key=lambda x: (x.sender, x.receiver))
            metrics.enforcing_violations.extend(violations)
            log.info("enforce mode: %d violation(s) in round %d, aborting", len(violations), r)
            break
        inboxes = {v: dict(sorted(box.items())) for v, box in delivered.items()}
    metrics.rounds_elapsed = r
    metrics.all_halted = not active
    return RunResult(dict(programs), metrics)
