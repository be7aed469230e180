from __future__ import annotations

import random

import pytest

from congestbc import BandwidthExceeded, fixture, generate, payload_bits, run_synchronous
from congestbc.engine import (
    C_BUNDLE,
    FLOAT_SIGMA_C,
    AccumValue,
    ApspTriple,
    BfsToken,
    DagSsspTriple,
    distance_bits,
    id_bits,
)
from congestbc.unweighted import naive_simultaneous_bfs, run_directed_apsp


class Silent:
    def on_round(self, r, inbox):
        return {}

    def halted(self):
        return False


class Flood:
    """Forwards a token along out-edges the first time it hears it."""

    def __init__(self, vid, g, start):
        self.vid, self.out = vid, g.out_neighbors(vid)
        self.start = start
        self.heard: int | None = None

    def on_round(self, r, inbox):
        if self.start and r == 1:
            self.heard = 0
        elif self.heard is None and inbox:
            self.heard = r - 1  # sent in r - 1, readable now
        else:
            return {}
        return {w: [BfsToken(0, self.vid)] for w in self.out}

    def halted(self):
        return self.heard is not None


class Probe:
    """Records the rounds at which it sees the other node's stamped messages."""

    def __init__(self, vid, peer):
        self.vid, self.peer = vid, peer
        self.seen: list[tuple[int, int]] = []

    def on_round(self, r, inbox):
        for _, bundle in inbox.items():
            for p in bundle:
                self.seen.append((r, p.depth))
        return {self.peer: [BfsToken(r, self.vid)]}

    def halted(self):
        return False


def test_silent_run():
    g = generate("random-digraph", 8, 0.3, None, 1)
    res = run_synchronous(g, {v: Silent() for v in g.vertices}, max_rounds=5)
    assert res.metrics.rounds_elapsed == 5
    assert res.metrics.total_messages == 0
    assert not res.metrics.all_halted


def test_flood_on_cycle_reaches_all_within_diameter():
    g = generate("cycle", 4)
    nodes = {v: Flood(v, g, v == 1) for v in g.vertices}
    res = run_synchronous(g, nodes, max_rounds=10)
    assert max(nd.heard for nd in nodes.values()) == 3
    assert res.metrics.all_halted


def test_lockstep_causality():
    g = generate("path", 2)
    nodes = {1: Probe(1, 2), 2: Probe(2, 1)}
    run_synchronous(g, nodes, max_rounds=6)
    # every message stamped with its send round is read exactly one round later
    for nd in nodes.values():
        assert nd.seen and all(r == sent + 1 for r, sent in nd.seen)


def test_channels_are_bidirectional():
    g = generate("path", 2)
    nodes = {1: Silent(), 2: Probe(2, 1)}
    res = run_synchronous(g, nodes, max_rounds=2)
    assert res.metrics.total_messages == 2


def test_sending_to_a_non_neighbor_fails():
    g = generate("path", 3)
    nodes = {1: Probe(1, 3), 2: Silent(), 3: Silent()}
    with pytest.raises(ValueError, match="not a neighbor"):
        run_synchronous(g, nodes, max_rounds=2)


def _fingerprint(run):
    return (
        sorted((s, v, run.solution.dist[s][v], run.solution.sigma[s][v], run.solution.preds[s][v])
               for s in run.solution.dist for v in run.solution.dist[s]),
        run.metrics.to_json(),
        sorted(run.tau.items()),
        run.diameter,
    )


@pytest.mark.parametrize("seed", range(3))
def test_evaluation_order_independence(seed):
    rng = random.Random(seed)
    g = generate("random-strongly-connected", rng.randint(5, 20), 0.2, None, seed)
    base = _fingerprint(run_directed_apsp(g, False, True))
    for _ in range(10):
        order = list(g.vertices)
        rng.shuffle(order)
        assert _fingerprint(run_directed_apsp(g, False, True, order=order)) == base


def test_determinism():
    g = generate("random-strongly-connected", 15, 0.25, None, 3)
    assert _fingerprint(run_directed_apsp(g, True)) == _fingerprint(run_directed_apsp(g, True))


def test_payload_bits_examples():
    n = 8
    assert payload_bits(ApspTriple(1, 2, 1), n) == id_bits(n) + distance_bits(n) + 1 == 3 + 4 + 1
    big = payload_bits(ApspTriple(1, 2, 2**100), n) - payload_bits(ApspTriple(1, 2, 1), n)
    assert big == 100  # sigma goes from 1 to 101 bits
    fl_small = payload_bits(ApspTriple(1, 2, 1.0), n, "float")
    fl_big = payload_bits(ApspTriple(1, 2, float(2**100)), n, "float")
    assert fl_small == fl_big == 3 + 4 + FLOAT_SIGMA_C * 3
    assert payload_bits(DagSsspTriple(1, 50, 1), n, wmax=10) == 3 + 7 + 1
    assert payload_bits(AccumValue(1, 0.5), n) == 3 + FLOAT_SIGMA_C * 3


def test_float_width_gives_double_precision():
    # 64 bits per id bit: a binary64 value fits even at n = 2
    assert FLOAT_SIGMA_C * id_bits(2) >= 64


def test_metrics_invariants():
    g = generate("random-strongly-connected", 12, 0.3, None, 2)
    m = run_directed_apsp(g, False, True).metrics
    assert m.total_messages <= m.rounds_elapsed * 2 * g.m
    assert m.total_payloads >= m.total_messages


def test_fig2_naive_bfs_congests_at_u4():
    g = fixture("fig2-congestion")
    name = {v: g.label(v) for v in g.vertices}
    ids = {nm: v for v, nm in name.items()}
    starts = {ids["s"]: 1, ids["u1"]: 3, ids["u2"]: 5, ids["u3"]: 7, ids["u4"]: 9,
              ids["u5"]: 11, ids["v"]: 21, ids["w"]: 24}
    one_triple = payload_bits(ApspTriple(g.n - 1, g.n, 1), g.n)
    res = naive_simultaneous_bfs(g, starts, enforce=one_triple)
    v = res.metrics.enforcing_violations[0]
    assert name[v.sender] == "u4"
    assert v.payloads == 2
    # account mode records the same bundle without stopping
    acc = naive_simultaneous_bfs(g, starts)
    assert not acc.metrics.aborted and acc.metrics.max_bundle_bits == 2 * one_triple


def test_fig2_pipelined_apsp_fits_one_triple():
    g = fixture("fig2-congestion")
    one_triple = payload_bits(ApspTriple(g.n - 1, g.n, 1), g.n)
    run = run_directed_apsp(g, True, False, enforce=one_triple)
    assert not run.metrics.aborted
    assert run.metrics.max_bundle_bits <= one_triple


def test_bundle_payload_cap_enforced():
    g = generate("path", 2)

    class Chatty(Silent):
        def on_round(self, r, inbox):
            return {2: [BfsToken(0, 1)] * (C_BUNDLE + 1)}

    res = run_synchronous(g, {1: Chatty(), 2: Silent()}, max_rounds=3, enforce=10**6)
    assert res.metrics.rounds_elapsed == 1
    (v,) = res.metrics.enforcing_violations
    assert (v.round, v.sender, v.receiver, v.payloads) == (1, 1, 2, C_BUNDLE + 1)
    with pytest.raises(BandwidthExceeded, match="channel 1->2 in round 1"):
        raise BandwidthExceeded(res.metrics)
