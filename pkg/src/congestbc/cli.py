"""Command-line experiment runner.

    python -m congestbc --algo bc-unweighted --fixture p3 --verify
    python -m congestbc --algo apsp-dag --gen random-dag:20:0.3:10 --seed 5 --verify
    python -m congestbc --algo apsp-dag --sweep "random-dag,n=5-40,p=0.3,wmax=10,seeds=0-4"

Exit status: 0 when everything checked passes, 1 on an oracle mismatch, a
failed bound or an aborted enforce-mode run, 2 on usage or I/O errors.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
import time
from dataclasses import asdict, dataclass
from fractions import Fraction

from . import dag, oracle, unweighted
from .engine import BandwidthExceeded, RunMetrics
from .graph import INF, Digraph, GraphError, classify, fixture, generate, parse_edge_list

log = logging.getLogger("congestbc")

ALGOS = ("apsp-unweighted", "bc-unweighted", "apsp-dag", "bc-dag", "source-detection", "hk-ssp")
DAG_ALGOS = ("apsp-dag", "bc-dag")
FLOAT_RTOL = 1e-9
RELABEL_C = 6


class UsageError(Exception):
    pass


@dataclass
class ExperimentConfig:
    algo: str
    graph_file: str | None = None
    gen: str | None = None
    fixture: str | None = None
    know_n: bool = True
    finalizer: bool | None = None  # None: on exactly when n is unknown
    enforce: int | None = None
    sigma: str = "exact"
    verify: bool = False
    seed: int = 0
    sources: tuple[int, ...] | None = None
    hops: int | None = None
    detect_r: int | None = None
    timing: bool = False

    def with_finalizer(self) -> bool:
        return (not self.know_n) if self.finalizer is None else self.finalizer


# ---------------------------------------------------------------------------
# graph loading


def parse_gen_spec(spec: str, seed: int) -> Digraph:
    """``kind:n[:p[:wmax]]``, e.g. ``cycle:4`` or ``random-dag:20:0.3:10``."""
    parts = spec.split(":")
    try:
        kind, n = parts[0], int(parts[1])
        p = float(parts[2]) if len(parts) > 2 and parts[2] else 0.0
        wmax = int(parts[3]) if len(parts) > 3 else None
    except (IndexError, ValueError) as exc:
        raise UsageError(f"bad generator spec {spec!r}: expected kind:n[:p[:wmax]]") from exc
    if len(parts) > 4:
        raise UsageError(f"bad generator spec {spec!r}: too many fields")
    return generate(kind, n, p, wmax, seed)


def load_graph(cfg: ExperimentConfig) -> Digraph:
    given = [x for x in (cfg.graph_file, cfg.gen, cfg.fixture) if x is not None]
    if len(given) != 1:
        raise UsageError("give exactly one of --graph, --gen, --fixture")
    if cfg.graph_file is not None:
        try:
            with open(cfg.graph_file, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise UsageError(f"cannot read {cfg.graph_file}: {exc}") from exc
        return parse_edge_list(text)
    if cfg.gen is not None:
        return parse_gen_spec(cfg.gen, cfg.seed)
    return fixture(cfg.fixture)


# ---------------------------------------------------------------------------
# serialization helpers


def _num(x):
    if x == INF:
        return "inf"
    return x


def _sigma_str(x) -> str:
    return repr(x) if isinstance(x, float) else str(x)


def _bc_entry(x) -> dict:
    q = Fraction(x)
    return {"exact": f"{q.numerator}/{q.denominator}", "decimal": f"{float(q):.15g}"}


def _solution_json(sol: oracle.ApspSolution, vertices) -> dict:
    return {
        "vertices": list(vertices),
        "distances": [[_num(sol.dist[s][v]) for v in vertices] for s in vertices],
        "sigma": [[_sigma_str(sol.sigma[s][v]) for v in vertices] for s in vertices],
        "preds": {
            str(s): {str(v): sorted(sol.preds[s][v]) for v in vertices if sol.preds[s][v]}
            for s in vertices
        },
    }


def _close(a, b) -> bool:
    if isinstance(a, float) or isinstance(b, float):
        return math.isclose(float(a), float(b), rel_tol=FLOAT_RTOL, abs_tol=0.0) or a == b
    return a == b


def solutions_match(got: oracle.ApspSolution, want: oracle.ApspSolution) -> bool:
    """Distances and predecessor sets exactly; path counts exactly, or within 1e-9 when floats."""
    for s in want.dist:
        for v in want.dist[s]:
            if got.dist[s][v] != want.dist[s][v] or got.preds[s][v] != want.preds[s][v]:
                return False
            if not _close(got.sigma[s][v], want.sigma[s][v]):
                return False
    return True


def bc_match(got: dict, want: dict) -> bool:
    return set(got) == set(want) and all(_close(got[v], want[v]) for v in want)


# ---------------------------------------------------------------------------
# bound verdicts


def _row(metric: str, formula: str, bound, measured, basis: str = "table") -> dict:
    ok = measured <= bound
    return {
        "metric": metric,
        "formula": formula,
        "bound": _num(bound),
        "measured": measured,
        "pass": bool(ok),
        "basis": basis,
    }


def _apsp_round_row(n, D, Du, know_n, fin, measured, prefix="rounds"):
    if not fin:
        if know_n:
            return _row(prefix, "2n", 2 * n, measured)
        # n is known everywhere by round 3*ecc + 2 of the counting tree
        return _row(prefix, "max{2n, 3D_u+2}", max(2 * n, 3 * Du + 2), measured, "n-computation")
    if D != INF:
        return _row(prefix, "n+5D", n + 5 * D, measured)
    # Incomplete nodes report at round 2n (or once the tree is known) and the
    # verdict climbs and descends the tree.  With the finalizer a control
    # payload may wait one round per hop for a triple, so each tree hop is
    # budgeted two rounds.
    if know_n:
        return _row(prefix, "max{2n, 4D_u+2}+4D_u+2", max(2 * n, 4 * Du + 2) + 4 * Du + 2,
                    measured, "finalizer drain")
    return _row(
        prefix, "max{2n, 6D_u+3}+4D_u+2", max(2 * n, 6 * Du + 3) + 4 * Du + 2, measured,
        "finalizer drain",
    )


def verdicts(cfg: ExperimentConfig, stats: dict, metrics: dict[str, RunMetrics]) -> list[dict]:
    n, m = stats["n"], stats["m"]
    D = INF if stats["D"] == "inf" else stats["D"]
    Du = INF if stats["D_u"] == "inf" else stats["D_u"]
    fin = cfg.with_finalizer()
    rows = []
    algo = cfg.algo
    if algo in ("apsp-unweighted", "bc-unweighted"):
        fwd = metrics["forward"]
        lean = cfg.know_n and not fin
        rows.append(_apsp_round_row(n, D, Du, cfg.know_n, fin, fwd.rounds_elapsed, "apsp rounds"))
        if lean:
            rows.append(_row("apsp messages", "mn", m * n, fwd.total_messages))
        else:
            rows.append(_row("apsp messages", "mn+4m", m * n + 4 * m, fwd.total_messages))
        rows.append(_row(
            "sends per (node, source)", "1", 1,
            max(fwd.per_node_per_source_sends.values(), default=0),
        ))
        if algo == "bc-unweighted":
            tot = metrics["total"]
            fwd_row = rows[0]
            if lean:
                rows.append(_row("bc rounds", "4n", 4 * n, tot.rounds_elapsed))
                rows.append(_row("bc messages", "2mn", 2 * m * n, tot.total_messages))
            else:
                if fin and D != INF:
                    rows.append(_row("bc rounds", "2n+7D", 2 * n + 7 * D, tot.rounds_elapsed))
                else:
                    b = 2 * fwd_row["bound"]
                    rows.append(_row("bc rounds", "2*(" + fwd_row["formula"] + ")", b,
                                     tot.rounds_elapsed, fwd_row["basis"]))
                rows.append(_row("bc messages", "2mn+4m", 2 * m * n + 4 * m, tot.total_messages))
    elif algo in DAG_ALGOS:
        L = stats["L"]
        fwd = metrics["forward"]
        rows.append(_row("dag apsp rounds", "n+2L", n + 2 * L, fwd.rounds_elapsed))
        rows.append(_row("dag apsp messages", "mn+m", m * n + m, fwd.total_messages))
        rows.append(_row(
            "sends per (node, source)", "1", 1,
            max(fwd.per_node_per_source_sends.values(), default=0),
        ))
        if algo == "bc-dag":
            tail = metrics["after_relabel"]
            rows.append(_row("dag bc rounds", "2n+3L", 2 * n + 3 * L, tail.rounds_elapsed))
            rows.append(_row("dag bc messages", "2mn+m", 2 * m * n + m, tail.total_messages))
        if not cfg.know_n:
            rel = metrics["relabel"]
            if algo == "apsp-dag":
                rows.append(_row("total rounds", f"{RELABEL_C}n", RELABEL_C * n,
                                 metrics["total"].rounds_elapsed, "O(n), constant configured"))
            else:
                rows.append(_row("relabel rounds", f"{RELABEL_C}n", RELABEL_C * n,
                                 rel.rounds_elapsed, "O(n), constant configured"))
    elif algo == "source-detection":
        rows.append(_row("rounds", "r+h", cfg.detect_r + cfg.hops, metrics["total"].rounds_elapsed))
    elif algo == "hk-ssp":
        k = len(cfg.sources)
        rows.append(_row("rounds", "k+h", k + cfg.hops, metrics["total"].rounds_elapsed))
    return rows


# ---------------------------------------------------------------------------
# experiment


def graph_stats(g: Digraph) -> dict:
    rep = classify(g)
    return {
        "n": g.n,
        "m": g.m,
        "weighted": g.weighted,
        "wmax": g.wmax,
        "strongly_connected": rep.strongly_connected,
        "weakly_connected": rep.weakly_connected,
        "is_dag": rep.is_dag,
        "D": _num(oracle.directed_diameter(g)),
        "D_u": _num(rep.undirected_diameter),
        "L": oracle.longest_path_L(g) if rep.is_dag else None,
    }


def _check_compat(cfg: ExperimentConfig, g: Digraph, stats: dict) -> None:
    if cfg.algo not in ALGOS:
        raise UsageError(f"unknown algorithm {cfg.algo!r}")
    if cfg.algo in DAG_ALGOS and not stats["is_dag"]:
        raise UsageError(f"{cfg.algo} needs a dag")
    if cfg.algo not in DAG_ALGOS and g.weighted and g.wmax > 1:
        raise UsageError(f"{cfg.algo} handles unweighted graphs only")
    if cfg.sigma not in ("exact", "float"):
        raise UsageError(f"unknown sigma mode {cfg.sigma!r}")


def _config_echo(cfg: ExperimentConfig) -> dict:
    d = asdict(cfg)
    d["finalizer"] = cfg.with_finalizer()
    d["bandwidth"] = "account" if cfg.enforce is None else f"enforce:{cfg.enforce}"
    del d["enforce"]
    if d["sources"] is not None:
        d["sources"] = list(d["sources"])
    return d


def run_experiment(cfg: ExperimentConfig, g: Digraph | None = None) -> dict:
    """Run one configured experiment and return the report (a JSON-ready dict)."""
    if g is None:
        g = load_graph(cfg)
    stats = graph_stats(g)
    _check_compat(cfg, g, stats)
    if cfg.algo in ("source-detection", "hk-ssp"):
        if cfg.sources is None:
            cfg.sources = tuple(g.vertices)
        if cfg.hops is None:
            cfg.hops = max(1, g.n - 1)
        if cfg.detect_r is None:
            cfg.detect_r = len(cfg.sources)
    report = {"config": _config_echo(cfg), "graph": stats}
    started = time.perf_counter()
    try:
        metrics, results, match = _execute(cfg, g)
    except BandwidthExceeded as exc:
        report["aborted"] = True
        report["error"] = str(exc)
        report["metrics"] = exc.metrics.to_json()
        report["verdicts"] = []
        report["results"] = None
        if cfg.verify:
            report["oracle_match"] = False
        return report
    report["aborted"] = False
    report["metrics"] = {k: v.to_json() for k, v in metrics.items()}
    report["verdicts"] = verdicts(cfg, stats, metrics)
    report["results"] = results
    if cfg.verify:
        report["oracle_match"] = match
    if cfg.timing:
        report["wall_clock_s"] = round(time.perf_counter() - started, 6)
    return report


def _execute(cfg: ExperimentConfig, g: Digraph):
    fin = cfg.with_finalizer()
    verts = list(g.vertices)
    results: dict = {}
    match = None
    if cfg.algo == "apsp-unweighted":
        run = unweighted.run_directed_apsp(
            g, cfg.know_n, fin, sigma_mode=cfg.sigma, enforce=cfg.enforce
        )
        metrics = {"forward": run.metrics, "total": run.metrics}
        results = _solution_json(run.solution, verts)
        if fin:
            results["diameter"] = _num(run.diameter) if run.diameter is not None else None
        if cfg.verify:
            match = solutions_match(run.solution, oracle.apsp(g))
    elif cfg.algo == "bc-unweighted":
        run = unweighted.run_bc(g, cfg.know_n, fin, sigma_mode=cfg.sigma, enforce=cfg.enforce)
        metrics = {"forward": run.forward.metrics, "accumulation": run.accumulation, "total": run.metrics}
        results = {"bc": {str(v): _bc_entry(run.bc[v]) for v in verts}}
        if cfg.verify:
            match = bc_match(run.bc, oracle.brandes_bc(g)) and solutions_match(
                run.forward.solution, oracle.apsp(g)
            )
    elif cfg.algo == "apsp-dag":
        run = dag.run_dag_apsp(g, cfg.know_n, sigma_mode=cfg.sigma, enforce=cfg.enforce)
        metrics = {"forward": run.forward, "total": run.metrics}
        if run.relabel:
            metrics["relabel"] = run.relabel.metrics
        results = _solution_json(run.solution, verts)
        results["levels"] = {str(v): run.levels[v] for v in verts}
        if cfg.verify:
            match = solutions_match(run.solution, oracle.apsp(g))
    elif cfg.algo == "bc-dag":
        run = dag.run_dag_bc(g, cfg.know_n, sigma_mode=cfg.sigma, enforce=cfg.enforce)
        fwd = run.forward
        metrics = {
            "forward": fwd.forward,
            "accumulation": run.accumulation,
            "after_relabel": fwd.forward.then(run.accumulation),
            "total": run.metrics,
        }
        if fwd.relabel:
            metrics["relabel"] = fwd.relabel.metrics
        results = {"bc": {str(v): _bc_entry(run.bc[v]) for v in verts}}
        if cfg.verify:
            match = bc_match(run.bc, oracle.brandes_bc(g)) and solutions_match(
                fwd.solution, oracle.apsp(g)
            )
    else:
        if cfg.algo == "source-detection":
            run = unweighted.source_detection(g, cfg.sources, cfg.hops, cfg.detect_r, enforce=cfg.enforce)
            want_r = cfg.detect_r
        else:
            run = unweighted.hk_ssp(g, cfg.sources, cfg.hops, enforce=cfg.enforce)
            want_r = None
        metrics = {"total": run.metrics}
        results = {
            "lists": {str(v): [[d, s] for d, s in run.lists[v]] for v in verts},
            "stable_round": run.stable_round,
        }
        if cfg.verify:
            want = unweighted.truncated_bfs_oracle(g, cfg.sources, cfg.hops, want_r)
            match = run.lists == want
    return metrics, results, match


def report_ok(report: dict) -> bool:
    if report.get("aborted"):
        return False
    if report["config"]["verify"]:
        return bool(report.get("oracle_match")) and all(v["pass"] for v in report["verdicts"])
    return True


# ---------------------------------------------------------------------------
# corpus sweep

SWEEP_FIELDS = (
    "family", "n", "m", "seed", "D", "L", "rounds", "messages",
    "round_bound", "round_slack", "message_bound", "message_slack", "oracle_match",
)


def _int_range(text: str) -> list[int]:
    """``7``, ``5-40`` or ``5-40/5``; a range whose end precedes its start is empty."""
    step = 1
    if "/" in text:
        text, s = text.split("/", 1)
        step = int(s)
    if "-" in text[1:]:
        i = text.index("-", 1)
        lo, hi = int(text[:i]), int(text[i + 1:])
        return list(range(lo, hi + 1, step))
    return [int(text)]


def parse_sweep_spec(spec: str) -> dict:
    parts = [p.strip() for p in spec.split(",") if p.strip()]
    if not parts or "=" in parts[0]:
        raise UsageError("sweep spec starts with a generator family, e.g. random-dag,n=5-40,seeds=0-4")
    out = {"family": parts[0], "n": [8], "p": 0.3, "wmax": None, "seeds": [0]}
    try:
        for part in parts[1:]:
            key, _, val = part.partition("=")
            if key == "n":
                out["n"] = _int_range(val)
            elif key == "seeds":
                out["seeds"] = _int_range(val)
            elif key == "p":
                out["p"] = float(val)
            elif key == "wmax":
                out["wmax"] = int(val)
            else:
                raise UsageError(f"unknown sweep key {key!r}")
    except ValueError as exc:
        raise UsageError(f"bad sweep spec {spec!r}: {exc}") from exc
    return out


def _primary(rows: list[dict], kind: str) -> dict | None:
    for r in rows:
        if kind in r["metric"] and "per" not in r["metric"]:
            return r
    return None


def corpus_sweep(cfg: ExperimentConfig, spec: str, out) -> bool:
    """Write one CSV row per instance to ``out``; True if every instance passed."""
    sw = parse_sweep_spec(spec)
    writer = csv.DictWriter(out, fieldnames=SWEEP_FIELDS, lineterminator="\n")
    writer.writeheader()
    out.flush()
    ok = True
    for n in sw["n"]:
        for seed in sw["seeds"]:
            g = generate(sw["family"], n, sw["p"], sw["wmax"], seed)
            run_cfg = ExperimentConfig(**{**asdict(cfg), "seed": seed, "verify": True})
            rep = run_experiment(run_cfg, g)
            rows = rep["verdicts"]
            rr, mr = _primary(rows, "rounds"), _primary(rows, "messages")
            total = rep["metrics"].get("total", rep["metrics"]) if not rep["aborted"] else rep["metrics"]
            row = {
                "family": sw["family"], "n": g.n, "m": g.m, "seed": seed,
                "D": rep["graph"]["D"], "L": rep["graph"]["L"] if rep["graph"]["L"] is not None else "",
                "rounds": rr["measured"] if rr else total["rounds_elapsed"],
                "messages": mr["measured"] if mr else total["total_messages"],
                "round_bound": rr["bound"] if rr else "",
                "round_slack": rr["bound"] - rr["measured"] if rr else "",
                "message_bound": mr["bound"] if mr else "",
                "message_slack": mr["bound"] - mr["measured"] if mr else "",
                "oracle_match": rep.get("oracle_match", False),
            }
            writer.writerow(row)
            out.flush()
            ok = ok and report_ok(rep)
    return ok


# ---------------------------------------------------------------------------
# entry point


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def _bandwidth(text: str) -> int | None:
    if text == "account":
        return None
    if text.startswith("enforce:"):
        try:
            bits = int(text.split(":", 1)[1])
        except ValueError as exc:
            raise argparse.ArgumentTypeError(f"bad bit budget in {text!r}") from exc
        if bits < 1:
            raise argparse.ArgumentTypeError("bit budget must be positive")
        return bits
    raise argparse.ArgumentTypeError("expected account or enforce:BITS")


def _id_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad id list {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="congestbc", description=__doc__.split("\n\n")[0])
    ap.add_argument("--algo", required=True, choices=ALGOS)
    src = ap.add_mutually_exclusive_group()
    src.add_argument("--graph", metavar="FILE", help="edge-list file")
    src.add_argument("--gen", metavar="SPEC", help="kind:n[:p[:wmax]]")
    src.add_argument("--fixture", metavar="NAME")
    ap.add_argument("--know-n", type=_bool, default=True, metavar="BOOL")
    ap.add_argument("--finalizer", type=_bool, default=None, metavar="BOOL",
                    help="default: on exactly when n is unknown")
    ap.add_argument("--bandwidth", type=_bandwidth, default=None, metavar="account|enforce:BITS")
    ap.add_argument("--sigma", choices=("exact", "float"), default="exact")
    ap.add_argument("--verify", action="store_true")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", metavar="PATH", help="write the report here instead of stdout")
    ap.add_argument("--sweep", metavar="SPEC", help="family,n=A-B,p=P,wmax=W,seeds=A-B")
    ap.add_argument("--sources", type=_id_list, metavar="IDS", help="source set for detection")
    ap.add_argument("--hops", type=int, metavar="H", help="hop bound for detection")
    ap.add_argument("--detect-r", type=int, metavar="R", help="result bound for detection")
    ap.add_argument("--timing", action="store_true", help="add wall-clock time to the report")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    cfg = ExperimentConfig(
        algo=args.algo, graph_file=args.graph, gen=args.gen, fixture=args.fixture,
        know_n=args.know_n, finalizer=args.finalizer, enforce=args.bandwidth,
        sigma=args.sigma, verify=args.verify, seed=args.seed, sources=args.sources,
        hops=args.hops, detect_r=args.detect_r, timing=args.timing,
    )
    try:
        if args.sweep:
            buf = open(args.out, "w", encoding="utf-8", newline="") if args.out else sys.stdout
            try:
                ok = corpus_sweep(cfg, args.sweep, buf)
            finally:
                if args.out:
                    buf.close()
            return 0 if ok else 1
        report = run_experiment(cfg)
        text = json.dumps(report, indent=2) + "\n"
        if args.out:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    except (UsageError, GraphError, OSError) as exc:
        print(f"congestbc: error: {exc}", file=sys.stderr)
        return 2
    return 0 if report_ok(report) else 1
