"""Simulated CONGEST-model APSP and betweenness centrality for directed graphs.

The engine runs node programs in lockstep rounds and meters every bundle
sent on every channel; the algorithm modules supply node programs for
unweighted digraphs and weighted dags, and ``oracle`` holds the sequential
reference computations they are checked against.
"""
from __future__ import annotations

from .dag import add_virtual_source, llt_build, relabel_ids, run_dag_apsp, run_dag_bc
from .engine import BandwidthExceeded, RunMetrics, payload_bits, run_synchronous
from .graph import (
    INF,
    Digraph,
    GraphError,
    classify,
    fixture,
    generate,
    parse_edge_list,
    serialize_edge_list,
)
from .oracle import apsp, bc_definition_bruteforce, brandes_bc, sssp_with_counts
from .unweighted import hk_ssp, run_bc, run_directed_apsp, source_detection

__all__ = [
    "INF", "BandwidthExceeded", "Digraph", "GraphError", "RunMetrics",
    "add_virtual_source", "apsp", "bc_definition_bruteforce", "brandes_bc", "classify",
    "fixture", "generate", "hk_ssp", "llt_build", "parse_edge_list", "payload_bits",
    "relabel_ids", "run_bc", "run_dag_apsp", "run_dag_bc", "run_directed_apsp",
    "run_synchronous", "serialize_edge_list", "source_detection", "sssp_with_counts",
]
