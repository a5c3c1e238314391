"""Command line interface.

Subcommands mirror the pipeline: simulate -> ingest -> infer -> validate,
with analyze/attack consuming any edge list and rerun replaying a manifest.
Exit codes: 0 success, 1 bad input or config, 2 malformed data (wire or
file format), 3 internal error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__, graph, sim
from .codec import epee, levin, peerlist
from .errors import InputError, InternalError, PeermapError, ProtocolError
from .infer import InferenceParams, infer_neighbors, read_inferred_csv, write_inferred_csv
from .manifest import MANIFEST_NAME, check_manifest_inputs, load_manifest, write_manifest
from .trace import (
    PeerAddress,
    PeerListObservation,
    aggregate,
    check_nonempty,
    load_ground_truth,
    load_trace,
    read_triplets_csv,
    write_ground_truth,
    write_packet_totals_csv,
    write_trace,
    write_triplets_csv,
    PROTOCOL_MAX_PEERS,
)
from .validate import (
    MetricUndefinedError,
    format_report_table,
    truth_neighbor_set,
    validate,
)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_PROTOCOL = 2
EXIT_INTERNAL = 3


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems through the input-error path."""

    def error(self, message: str) -> None:  # type: ignore[override]
        raise InputError(message)


def _out_dir(params: dict) -> Path:
    out = Path(params["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, doc: dict) -> None:
    with open(path, "w", encoding="utf-8") as fp:
        json.dump(doc, fp, sort_keys=True, indent=2)
        fp.write("\n")


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def cmd_simulate(params: dict) -> tuple[list[str], list[str], int | None]:
    out = _out_dir(params)
    cfg = sim.config_from_mapping(params["config"])
    result = sim.run(cfg)
    with open(out / "trace.jsonl", "w", encoding="utf-8") as fp:
        write_trace(result.trace, fp)
    with open(out / "truth.jsonl", "w", encoding="utf-8") as fp:
        write_ground_truth(result.snapshots, fp)
    _write_json(out / "sim_stats.json", {
        "observations": result.stats.observations,
        "max_whitelist": result.stats.max_whitelist,
        "due_rounds": result.stats.due_rounds,
        "edges": len(result.truth_edges),
        "odds": {
            "p_selected": result.odds.p_selected,
            "p_enter": result.odds.p_enter,
            "p_neighbour": result.odds.p_neighbour,
            "p_random": result.odds.p_random,
        },
    })
    print(f"simulated {cfg.node_count} nodes / {cfg.rounds} rounds: "
          f"{result.stats.observations} observations, {len(result.truth_edges)} true links")
    return [], ["trace.jsonl", "truth.jsonl", "sim_stats.json"], cfg.seed


# ---------------------------------------------------------------------------
# ingest
# ---------------------------------------------------------------------------

def _ingest_flows(flow_dir: Path, max_peers: int, stats: dict) -> list[PeerListObservation]:
    observations: list[PeerListObservation] = []
    for path in sorted(flow_dir.iterdir()):
        if not path.is_file():
            continue
        stats["files_scanned"] += 1
        parsed = peerlist.parse_flow_filename(path.name)
        if parsed is None:
            stats["files_ignored"] += 1
            continue
        source, observer = parsed
        data = path.read_bytes()
        try:
            frames, partial = levin.parse_levin_frames(data)
        except (levin.FrameSyncError, levin.PayloadTooLargeError):
            stats["files_desynced"] += 1
            continue
        if partial is not None:
            stats["partial_tails"] += 1
        seq = 0
        for header, body in frames:
            stats["frames_total"] += 1
            if header.command not in levin.PEER_COMMANDS:
                stats["frames_other"] += 1
                continue
            try:
                root = epee.parse_epee(body)
                extract = peerlist.extract_peerlist(root)
            except PeermapError:
                stats["frames_rejected"] += 1
                continue
            stats["frames_parsed"] += 1
            stats["skipped_non_ipv4"] += extract.skipped_non_ipv4
            if not extract.entries:
                continue
            obs = PeerListObservation.from_raw(
                seq, observer, source,
                (e.address for e in extract.entries), max_peers=max_peers,
            )
            stats["peers_extracted"] += len(obs.peers)
            observations.append(obs)
            seq += 1
    return observations


def cmd_ingest(params: dict) -> tuple[list[str], list[str], int | None]:
    out = _out_dir(params)
    max_peers = params["max_peers"]
    exclude = frozenset(PeerAddress.parse(e) for e in params["exclude"])
    inputs: list[str] = []
    stats = {
        "files_scanned": 0, "files_ignored": 0, "files_desynced": 0,
        "partial_tails": 0, "frames_total": 0, "frames_parsed": 0,
        "frames_rejected": 0, "frames_other": 0, "peers_extracted": 0,
        "skipped_non_ipv4": 0, "observations": 0, "excluded_sources": sorted(params["exclude"]),
    }
    if params["trace"]:
        inputs.append(params["trace"])
        with open(params["trace"], encoding="utf-8") as fp:
            observations = list(load_trace(fp, max_peers=max_peers))
        stats["frames_parsed"] = len(observations)
        stats["peers_extracted"] = sum(len(o.peers) for o in observations)
    else:
        flow_dir = Path(params["flows"])
        if not flow_dir.is_dir():
            raise InputError(f"flow directory not found: {flow_dir}")
        observations = _ingest_flows(flow_dir, max_peers, stats)
    check_nonempty(observations, "parsable peer-list observations")
    stats["observations"] = len(observations)
    table = aggregate(observations, exclude)
    with open(out / "triplets.csv", "w", encoding="utf-8", newline="") as fp:
        write_triplets_csv(table, fp)
    with open(out / "packet_totals.csv", "w", encoding="utf-8", newline="") as fp:
        write_packet_totals_csv(table, fp)
    _write_json(out / "ingest_stats.json", stats)
    print(f"ingested {stats['observations']} observations -> "
          f"{len(table.counts)} (source, address) pairs")
    return inputs, ["triplets.csv", "packet_totals.csv", "ingest_stats.json"], None


# ---------------------------------------------------------------------------
# infer
# ---------------------------------------------------------------------------

def cmd_infer(params: dict) -> tuple[list[str], list[str], int | None]:
    out = _out_dir(params)
    with open(params["triplets"], encoding="utf-8") as fp:
        table = read_triplets_csv(fp)
    ip = InferenceParams(
        min_count=params["min_count"],
        min_group=params["min_group"],
        weighted=params["weighted"],
    )
    result = infer_neighbors(table, ip)
    with open(out / "inferred.csv", "w", encoding="utf-8", newline="") as fp:
        write_inferred_csv(result, fp)
    _write_json(out / "infer_stats.json", {
        "rows_seen": result.rows_seen,
        "rows_after_count_filter": result.rows_after_count_filter,
        "edges": len(result.edges),
        "skipped_sources": [str(s) for s in result.skipped_sources],
        "degenerate_sources": [str(s) for s in result.degenerate_sources],
        "params": {"min_count": ip.min_count, "min_group": ip.min_group,
                   "weighted": ip.weighted},
    })
    print(f"inferred {len(result.edges)} neighbor links "
          f"({len(result.skipped_sources)} sources skipped, "
          f"{len(result.degenerate_sources)} degenerate)")
    return [params["triplets"]], ["inferred.csv", "infer_stats.json"], None


# ---------------------------------------------------------------------------
# validate
# ---------------------------------------------------------------------------

def cmd_validate(params: dict) -> tuple[list[str], list[str], int | None]:
    out = _out_dir(params)
    with open(params["inferred"], encoding="utf-8") as fp:
        edges = read_inferred_csv(fp)
    with open(params["truth"], encoding="utf-8") as fp:
        snapshots = load_ground_truth(fp)
    window = tuple(params["window"]) if params["window"] else None
    match = params["match"]
    reports = []
    rows = []
    defined = 0
    for text in params["observers"]:
        observer = PeerAddress.parse(text)
        truth = truth_neighbor_set(snapshots, observer, window, match=match)
        try:
            rep = validate(edges, truth, observer, window=window, match=match)
        except MetricUndefinedError as exc:
            rows.append({
                "observer": str(observer),
                "window": list(window) if window else None,
                "inferred": 0, "matched": 0, "truth_size": len(truth),
                "precision": None, "recall": None, "undefined": exc.metric,
            })
            continue
        defined += 1
        reports.append(rep)
        rows.append(rep.to_json_dict())
    with open(out / "report.jsonl", "w", encoding="utf-8") as fp:
        for row in rows:
            fp.write(json.dumps(row, sort_keys=True) + "\n")
    sys.stdout.write(format_report_table(reports))
    for row in rows:
        if row.get("undefined"):
            print(f"note: {row['observer']}: {row['undefined']} undefined "
                  f"(no inferred edges touch it)")
    if defined == 0:
        raise InputError("no observer produced defined metrics")
    return [params["inferred"], params["truth"]], ["report.jsonl"], None


# ---------------------------------------------------------------------------
# analyze / attack
# ---------------------------------------------------------------------------

def _load_graph(params: dict) -> tuple[graph.Graph, list[str]]:
    if params.get("edges"):
        with open(params["edges"], encoding="utf-8") as fp:
            pairs = graph.read_edge_pairs_csv(fp)
        return graph.build_graph(pairs), [params["edges"]]
    with open(params["truth"], encoding="utf-8") as fp:
        snapshots = load_ground_truth(fp)
    pairs = [(s.node, c) for s in snapshots for c in s.connections]
    if not pairs:
        raise InputError("ground truth holds no connections")
    return graph.build_graph(pairs), [params["truth"]]


def cmd_analyze(params: dict) -> tuple[list[str], list[str], int | None]:
    out = _out_dir(params)
    g, inputs = _load_graph(params)
    if g.n == 0:
        raise InputError("edge list is empty")
    k = params["top_k"]
    threads = params["threads"]
    metrics = graph.compute_metrics(g, k, threads=threads)
    index = {addr: i for i, addr in enumerate(g.nodes)}
    hub_ids = [index[PeerAddress.parse(a)] for a, _ in metrics["betweenness"]["top"]]
    hubs = [g.nodes[i] for i in hub_ids]
    matrix = graph.overlap_matrix(g, hub_ids)
    with open(out / "metrics.json", "w", encoding="utf-8") as fp:
        graph.write_metrics_json(metrics, fp)
    with open(out / "overlap.csv", "w", encoding="utf-8", newline="") as fp:
        graph.write_overlap_csv(hubs, matrix, fp)
    with open(out / "graph.graphml", "w", encoding="utf-8") as fp:
        graph.write_graphml(g, fp)
    with open(out / "edges.csv", "w", encoding="utf-8", newline="") as fp:
        graph.write_edges_csv(g, fp)
    print(f"analyzed {g.n} nodes / {g.edge_count} edges; "
          f"LCC {metrics['lcc_nodes']} ({metrics['lcc_fraction']:.3f}), "
          f"top-{k} coverage {metrics['one_hop_coverage']['top_betweenness']:.3f}")
    return inputs, ["metrics.json", "overlap.csv", "graph.graphml", "edges.csv"], None


def cmd_attack(params: dict) -> tuple[list[str], list[str], int | None]:
    out = _out_dir(params)
    g, inputs = _load_graph(params)
    strategies = list(graph.ATTACK_STRATEGIES) if params["strategy"] == "all" else [params["strategy"]]
    curves = []
    summary = {}
    for strat in strategies:
        curve = graph.attack(
            g, strat, params["step"],
            seed=params["seed"], adaptive=params["adaptive"],
            collapse_fraction=params["collapse"], threads=params["threads"],
        )
        curves.append(curve)
        summary[strat] = {
            "turning_point": curve.turning_point,
            "points": len(curve.points),
        }
        tp = "none" if curve.turning_point is None else f"{curve.turning_point:.3f}"
        print(f"attack[{strat}]: turning point {tp}")
    with open(out / "attack_curve.csv", "w", encoding="utf-8", newline="") as fp:
        graph.write_attack_csv(curves, fp)
    _write_json(out / "attack_summary.json", {
        "collapse_fraction": params["collapse"],
        "adaptive": params["adaptive"],
        "step": params["step"],
        "strategies": summary,
    })
    return inputs, ["attack_curve.csv", "attack_summary.json"], params["seed"]


# ---------------------------------------------------------------------------
# plumbing
# ---------------------------------------------------------------------------

_HANDLERS = {
    "simulate": cmd_simulate,
    "ingest": cmd_ingest,
    "infer": cmd_infer,
    "validate": cmd_validate,
    "analyze": cmd_analyze,
    "attack": cmd_attack,
}


def _run_command(command: str, params: dict) -> None:
    handler = _HANDLERS[command]
    inputs, outputs, seed = handler(params)
    # out_dir stays out of the manifest so a rerun into a fresh directory
    # reproduces the manifest itself byte for byte
    recorded = {k: v for k, v in params.items() if k != "out_dir"}
    write_manifest(
        Path(params["out_dir"]),
        command=command,
        parameters=recorded,
        input_paths=inputs,
        outputs=outputs + [MANIFEST_NAME],
        seed=seed,
        version=__version__,
    )


def cmd_rerun(manifest_path: str, out_dir: str) -> None:
    doc = load_manifest(manifest_path)
    command = doc["command"]
    if command not in _HANDLERS:
        raise InputError(f"manifest names unknown command {command!r}")
    check_manifest_inputs(doc)
    params = dict(doc["parameters"])
    params["out_dir"] = out_dir
    _run_command(command, params)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="peermap", description=__doc__)
    parser.add_argument("--version", action="version", version=f"peermap {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="generate a synthetic trace with known truth")
    p_sim.add_argument("--out-dir", required=True)
    p_sim.add_argument("--config", help="flat key=value config file")
    p_sim.add_argument("--nodes", type=int, dest="node_count")
    p_sim.add_argument("--rounds", type=int)
    p_sim.add_argument("--out-degree", type=int, dest="out_degree")
    p_sim.add_argument("--whitelist-cap", type=int, dest="whitelist_cap")
    p_sim.add_argument("--top-window", type=int, dest="top_window")
    p_sim.add_argument("--response-size", type=int, dest="response_size")
    p_sim.add_argument("--handshake-period", type=int, dest="handshake_period")
    p_sim.add_argument("--observers", help="comma-separated node indices")
    p_sim.add_argument("--seed", type=int)
    p_sim.add_argument("--seed-node-count", type=int, dest="seed_node_count")
    p_sim.add_argument("--seed-bias", type=float, dest="seed_bias")
    p_sim.add_argument("--ping-count", type=int, dest="ping_count")

    p_ing = sub.add_parser("ingest", help="aggregate a trace or raw flow captures")
    p_ing.add_argument("--out-dir", required=True)
    group = p_ing.add_mutually_exclusive_group(required=True)
    group.add_argument("--trace", help="JSONL observation trace")
    group.add_argument("--flows", help="directory of per-connection byte streams")
    p_ing.add_argument("--exclude", action="append", default=[],
                       help="drop observations from this source (ip or ip:port); repeatable")
    p_ing.add_argument("--max-peers", type=int, default=PROTOCOL_MAX_PEERS)

    p_inf = sub.add_parser("infer", help="label likely neighbor links from triplet counts")
    p_inf.add_argument("--out-dir", required=True)
    p_inf.add_argument("--triplets", required=True)
    p_inf.add_argument("--min-count", type=int, default=2)
    p_inf.add_argument("--min-group", type=int, default=8)
    p_inf.add_argument("--weighted", action="store_true")

    p_val = sub.add_parser("validate", help="score inferred links against ground truth")
    p_val.add_argument("--out-dir", required=True)
    p_val.add_argument("--inferred", required=True)
    p_val.add_argument("--truth", required=True)
    p_val.add_argument("--observers", required=True,
                       help="comma-separated observer addresses")
    p_val.add_argument("--window", type=int, nargs=2, metavar=("START", "END"))
    p_val.add_argument("--match", choices=["ip", "ip-port"], default="ip")

    p_ana = sub.add_parser("analyze", help="centrality, coverage, and overlap metrics")
    p_ana.add_argument("--out-dir", required=True)
    group = p_ana.add_mutually_exclusive_group(required=True)
    group.add_argument("--edges", help="edge CSV (inferred or plain)")
    group.add_argument("--truth", help="ground-truth JSONL")
    p_ana.add_argument("--top-k", type=int, default=14)
    p_ana.add_argument("--threads", type=int, default=1)

    p_att = sub.add_parser("attack", help="targeted node-removal robustness curves")
    p_att.add_argument("--out-dir", required=True)
    group = p_att.add_mutually_exclusive_group(required=True)
    group.add_argument("--edges")
    group.add_argument("--truth")
    p_att.add_argument("--strategy", choices=list(graph.ATTACK_STRATEGIES) + ["all"],
                       default="all")
    p_att.add_argument("--step", type=float, default=0.01)
    p_att.add_argument("--adaptive", action="store_true")
    p_att.add_argument("--collapse", type=float, default=0.01)
    p_att.add_argument("--seed", type=int, default=0)
    p_att.add_argument("--threads", type=int, default=1)

    p_rer = sub.add_parser("rerun", help="replay a recorded manifest")
    p_rer.add_argument("manifest")
    p_rer.add_argument("--out-dir", required=True)

    return parser


_SIM_FLAG_KEYS = (
    "node_count", "rounds", "out_degree", "whitelist_cap", "top_window",
    "response_size", "handshake_period", "observers", "seed",
    "seed_node_count", "seed_bias", "ping_count",
)


def _collect_params(args: argparse.Namespace) -> dict:
    if args.command == "simulate":
        mapping: dict[str, str] = {}
        if args.config:
            with open(args.config, encoding="utf-8") as fp:
                mapping.update(sim.read_config_file(fp))
        for key in _SIM_FLAG_KEYS:
            value = getattr(args, key)
            if value is not None:
                mapping[key] = str(value)
        return {"out_dir": args.out_dir, "config": mapping}
    if args.command == "ingest":
        return {
            "out_dir": args.out_dir, "trace": args.trace, "flows": args.flows,
            "exclude": args.exclude, "max_peers": args.max_peers,
        }
    if args.command == "infer":
        return {
            "out_dir": args.out_dir, "triplets": args.triplets,
            "min_count": args.min_count, "min_group": args.min_group,
            "weighted": args.weighted,
        }
    if args.command == "validate":
        return {
            "out_dir": args.out_dir, "inferred": args.inferred, "truth": args.truth,
            "observers": [o.strip() for o in args.observers.split(",") if o.strip()],
            "window": list(args.window) if args.window else None,
            "match": args.match,
        }
    if args.command == "analyze":
        return {
            "out_dir": args.out_dir, "edges": args.edges, "truth": args.truth,
            "top_k": args.top_k, "threads": args.threads,
        }
    if args.command == "attack":
        return {
            "out_dir": args.out_dir, "edges": args.edges, "truth": args.truth,
            "strategy": args.strategy, "step": args.step, "adaptive": args.adaptive,
            "collapse": args.collapse, "seed": args.seed, "threads": args.threads,
        }
    raise InternalError(f"unhandled command {args.command!r}")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "rerun":
            cmd_rerun(args.manifest, args.out_dir)
        else:
            _run_command(args.command, _collect_params(args))
        return EXIT_OK
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ProtocolError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PROTOCOL
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except PeermapError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
