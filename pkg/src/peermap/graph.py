"""Topology analytics: components, centrality, coverage, attack curves.

Graphs are simple and undirected. Nodes are addresses; indices into the
sorted node tuple are used internally, and every ordering (top-k ties, LCC
ties, removal order) falls back to that index order, which is address order,
so outputs are deterministic.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import IO, Iterable, Sequence
from xml.sax.saxutils import quoteattr

import numpy as np

from . import kernels
from .errors import InputError, SchemaError
from .infer import INFERRED_HEADER
from .rng import STREAM_ATTACK, SplitMix64, derive_state
from .trace import PeerAddress

# Betweenness sources are dispatched to the kernel in fixed-size blocks and
# the per-block partial sums are added in block order, so the float result
# is identical for any thread count.
BETWEENNESS_BLOCK = 64

ATTACK_STRATEGIES = ("degree", "betweenness", "random")


@dataclass
class Graph:
    nodes: tuple[PeerAddress, ...]
    adj: tuple[tuple[int, ...], ...]
    self_loops_dropped: int = 0

    @property
    def n(self) -> int:
        return len(self.nodes)

    @property
    def edge_count(self) -> int:
        return sum(len(a) for a in self.adj) // 2

    def degrees(self) -> np.ndarray:
        return np.array([len(a) for a in self.adj], dtype=np.int64)

    def csr(self) -> tuple[np.ndarray, np.ndarray]:
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        for i, neigh in enumerate(self.adj):
            indptr[i + 1] = indptr[i] + len(neigh)
        indices = np.empty(int(indptr[-1]), dtype=np.int32)
        for i, neigh in enumerate(self.adj):
            indices[indptr[i]:indptr[i + 1]] = neigh
        return indptr, indices

    def subgraph(self, keep: Sequence[int]) -> "Graph":
        keep_sorted = sorted(set(keep))
        remap = {old: new for new, old in enumerate(keep_sorted)}
        nodes = tuple(self.nodes[i] for i in keep_sorted)
        adj = tuple(
            tuple(remap[j] for j in self.adj[i] if j in remap)
            for i in keep_sorted
        )
        return Graph(nodes, adj)

    def edge_pairs(self) -> list[tuple[PeerAddress, PeerAddress]]:
        out = []
        for i, neigh in enumerate(self.adj):
            for j in neigh:
                if j > i:
                    out.append((self.nodes[i], self.nodes[j]))
        return out


def build_graph(pairs: Iterable[tuple[PeerAddress, PeerAddress]]) -> Graph:
    """Deduplicate pairs into a simple undirected graph.

    Both orientations of a pair collapse to one edge; self-loops are dropped
    and counted on the result.
    """
    addr_set: set[PeerAddress] = set()
    raw_edges: set[tuple[PeerAddress, PeerAddress]] = set()
    self_loops = 0
    for a, b in pairs:
        addr_set.add(a)
        addr_set.add(b)
        if a == b:
            self_loops += 1
            continue
        raw_edges.add((a, b) if a < b else (b, a))
    nodes = tuple(sorted(addr_set))
    index = {addr: i for i, addr in enumerate(nodes)}
    adj_sets: list[set[int]] = [set() for _ in nodes]
    for a, b in raw_edges:
        ia, ib = index[a], index[b]
        adj_sets[ia].add(ib)
        adj_sets[ib].add(ia)
    return Graph(nodes, tuple(tuple(sorted(s)) for s in adj_sets), self_loops)


def components(g: Graph) -> list[list[int]]:
    """Connected components, each sorted, ordered by smallest member."""
    seen = [False] * g.n
    out: list[list[int]] = []
    for start in range(g.n):
        if seen[start]:
            continue
        comp = [start]
        seen[start] = True
        head = 0
        while head < len(comp):
            v = comp[head]
            head += 1
            for w in g.adj[v]:
                if not seen[w]:
                    seen[w] = True
                    comp.append(w)
        out.append(sorted(comp))
    return out


def lcc_indices(g: Graph) -> list[int]:
    """Largest connected component; size ties go to the smallest node id."""
    comps = components(g)
    if not comps:
        return []
    return min(comps, key=lambda c: (-len(c), c[0]))


def lcc(g: Graph) -> Graph:
    return g.subgraph(lcc_indices(g))


def betweenness(g: Graph, threads: int = 1) -> np.ndarray:
    """Unnormalized betweenness over unordered node pairs.

    Unreachable pairs contribute nothing. Results are bit-identical for any
    ``threads`` value because partial sums are merged in block order.
    """
    n = g.n
    if n == 0:
        return np.zeros(0, dtype=np.float64)
    indptr, indices = g.csr()
    blocks = [(s, min(s + BETWEENNESS_BLOCK, n)) for s in range(0, n, BETWEENNESS_BLOCK)]
    if threads <= 1 or len(blocks) == 1:
        partials = [kernels.brandes_block(indptr, indices, a, b) for a, b in blocks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            partials = list(pool.map(
                lambda ab: kernels.brandes_block(indptr, indices, ab[0], ab[1]), blocks
            ))
    total = np.zeros(n, dtype=np.float64)
    for p in partials:
        total += p
    return total / 2.0


def top_k(g: Graph, scores: np.ndarray, k: int) -> list[tuple[PeerAddress, float]]:
    """Top ``k`` nodes by score, ties broken by node id (address order)."""
    order = sorted(range(g.n), key=lambda i: (-scores[i], i))
    return [(g.nodes[i], float(scores[i])) for i in order[:k]]


def one_hop_coverage(g: Graph, node_ids: Sequence[int]) -> float:
    """Fraction of all nodes inside the set or adjacent to it."""
    if g.n == 0:
        raise InputError("coverage of an empty graph is undefined")
    covered = set(node_ids)
    for i in node_ids:
        covered.update(g.adj[i])
    return len(covered) / g.n


def overlap_matrix(g: Graph, node_ids: Sequence[int]) -> np.ndarray:
    """Pairwise neighborhood overlap.

    r(x, y) = |N(x) and N(y), minus the endpoints| divided by
    min(|N(x) - {y}|, |N(y) - {x}|); 0.0 when a denominator is empty.
    The matrix is symmetric with 1.0 on the diagonal for non-isolated nodes.
    """
    m = len(node_ids)
    out = np.zeros((m, m), dtype=np.float64)
    sets = [set(g.adj[i]) for i in node_ids]
    for a in range(m):
        for b in range(a, m):
            x, y = node_ids[a], node_ids[b]
            common = (sets[a] & sets[b]) - {x, y}
            nx = len(sets[a] - {y})
            ny = len(sets[b] - {x})
            denom = min(nx, ny)
            r = len(common) / denom if denom else 0.0
            if a == b:
                r = 1.0 if sets[a] else 0.0
            out[a, b] = out[b, a] = r
    return out


# ---------------------------------------------------------------------------
# Targeted attack curves
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AttackPoint:
    removed_fraction: float
    lcc_fraction: float
    removed_count: int
    lcc_count: int


@dataclass
class AttackCurve:
    strategy: str
    points: list[AttackPoint] = field(default_factory=list)
    turning_point: float | None = None


def _lcc_count_remaining(g: Graph, removed: np.ndarray) -> int:
    best = 0
    seen = removed.copy()
    stack: list[int] = []
    for start in range(g.n):
        if seen[start]:
            continue
        seen[start] = True
        stack.append(start)
        size = 0
        while stack:
            v = stack.pop()
            size += 1
            for w in g.adj[v]:
                if not seen[w]:
                    seen[w] = True
                    stack.append(w)
        if size > best:
            best = size
    return best


def _static_order(g: Graph, strategy: str, seed: int, threads: int) -> list[int]:
    if strategy == "degree":
        scores = g.degrees().astype(np.float64)
    elif strategy == "betweenness":
        scores = betweenness(g, threads=threads)
    elif strategy == "random":
        rng = SplitMix64(derive_state(seed, STREAM_ATTACK))
        order = list(range(g.n))
        for t in range(g.n - 1):
            u = t + rng.next_below(g.n - t)
            order[t], order[u] = order[u], order[t]
        return order
    else:
        raise InputError(f"unknown attack strategy {strategy!r}")
    return sorted(range(g.n), key=lambda i: (-scores[i], i))


def attack(
    g: Graph,
    strategy: str,
    step_fraction: float,
    *,
    seed: int = 0,
    adaptive: bool = False,
    collapse_fraction: float = 0.01,
    threads: int = 1,
) -> AttackCurve:
    """Remove nodes in batches and track the largest component.

    Static mode ranks nodes once on the intact graph; adaptive mode re-ranks
    the remaining graph before every batch (much slower for betweenness).
    The turning point is the smallest removed fraction at which the LCC
    holds at most ``collapse_fraction`` of the original nodes.
    """
    if not 0.0 < step_fraction <= 1.0:
        raise InputError(f"step_fraction must be in (0, 1], got {step_fraction}")
    if g.n == 0:
        raise InputError("cannot attack an empty graph")

    n0 = g.n
    removed = np.zeros(n0, dtype=bool)
    curve = AttackCurve(strategy=strategy)

    def record(removed_count: int) -> None:
        lcc_count = _lcc_count_remaining(g, removed)
        point = AttackPoint(removed_count / n0, lcc_count / n0, removed_count, lcc_count)
        curve.points.append(point)
        if curve.turning_point is None and lcc_count <= collapse_fraction * n0:
            curve.turning_point = point.removed_fraction

    record(0)
    rerank = adaptive and strategy != "random"
    order: list[int] = [] if rerank else _static_order(g, strategy, seed, threads=threads)
    cursor = 0
    removed_count = 0
    batch_no = 0
    while removed_count < n0:
        batch_no += 1
        # ceil with a small backoff so float error cannot inflate the batch
        target = min(n0, math.ceil(batch_no * step_fraction * n0 - 1e-9))
        if target <= removed_count:
            continue
        need = target - removed_count
        if rerank:
            live = [i for i in range(n0) if not removed[i]]
            sub = g.subgraph(live)
            sub_order = _static_order(sub, strategy, seed, threads=threads)
            victims = [live[i] for i in sub_order[:need]]
        else:
            victims = []
            while len(victims) < need:
                cand = order[cursor]
                cursor += 1
                if not removed[cand]:
                    victims.append(cand)
        for v in victims:
            removed[v] = True
        removed_count = target
        record(removed_count)
    return curve


ATTACK_HEADER = ["strategy", "removed_fraction", "lcc_fraction"]


def write_attack_csv(curves: Sequence[AttackCurve], fp: IO[str]) -> None:
    w = csv.writer(fp, lineterminator="\n")
    w.writerow(ATTACK_HEADER)
    for curve in curves:
        for p in curve.points:
            w.writerow([curve.strategy, repr(p.removed_fraction), repr(p.lcc_fraction)])


# ---------------------------------------------------------------------------
# Metrics bundle and exports
# ---------------------------------------------------------------------------

def compute_metrics(g: Graph, k: int, threads: int = 1) -> dict:
    """JSON-ready summary: sizes, degree stats, top-k lists, coverage."""
    degs = g.degrees()
    lcc_nodes = lcc_indices(g)
    bc = betweenness(g, threads=threads)
    top_by_degree = top_k(g, degs.astype(np.float64), k)
    top_by_bc = top_k(g, bc, k)
    index = {addr: i for i, addr in enumerate(g.nodes)}
    top_bc_ids = [index[a] for a, _ in top_by_bc]
    top_deg_ids = [index[a] for a, _ in top_by_degree]
    return {
        "nodes": g.n,
        "edges": g.edge_count,
        "self_loops_dropped": g.self_loops_dropped,
        "lcc_nodes": len(lcc_nodes),
        "lcc_fraction": len(lcc_nodes) / g.n if g.n else 0.0,
        "degree": {
            "max": int(degs.max()) if g.n else 0,
            "mean": float(degs.mean()) if g.n else 0.0,
            "top": [[str(a), int(s)] for a, s in top_by_degree],
        },
        "betweenness": {
            "top": [[str(a), s] for a, s in top_by_bc],
        },
        "one_hop_coverage": {
            "top_degree": one_hop_coverage(g, top_deg_ids),
            "top_betweenness": one_hop_coverage(g, top_bc_ids),
            "k": k,
        },
    }


def write_metrics_json(metrics: dict, fp: IO[str]) -> None:
    json.dump(metrics, fp, sort_keys=True, indent=2)
    fp.write("\n")


def write_overlap_csv(nodes: Sequence[PeerAddress], matrix: np.ndarray, fp: IO[str]) -> None:
    w = csv.writer(fp, lineterminator="\n")
    w.writerow(["node"] + [str(a) for a in nodes])
    for i, a in enumerate(nodes):
        w.writerow([str(a)] + [repr(float(x)) for x in matrix[i]])


def write_graphml(g: Graph, fp: IO[str]) -> None:
    fp.write('<?xml version="1.0" encoding="UTF-8"?>\n')
    fp.write('<graphml xmlns="http://graphml.graphdrawing.org/xmlns">\n')
    fp.write('  <graph id="G" edgedefault="undirected">\n')
    for a in g.nodes:
        fp.write(f"    <node id={quoteattr(str(a))}/>\n")
    for a, b in g.edge_pairs():
        fp.write(f"    <edge source={quoteattr(str(a))} target={quoteattr(str(b))}/>\n")
    fp.write("  </graph>\n</graphml>\n")


EDGES_HEADER = ["ip1", "ip2"]


def write_edges_csv(g: Graph, fp: IO[str]) -> None:
    w = csv.writer(fp, lineterminator="\n")
    w.writerow(EDGES_HEADER)
    for a, b in g.edge_pairs():
        w.writerow([str(a), str(b)])


def read_edge_pairs_csv(fp: IO[str]) -> list[tuple[PeerAddress, PeerAddress]]:
    """Edge pairs from either a plain edge CSV or an inferred-edge CSV."""
    r = csv.reader(fp)
    header = next(r, None)
    if header == INFERRED_HEADER:
        cols = 4
    elif header == EDGES_HEADER:
        cols = 2
    else:
        raise SchemaError(
            "expected an edge CSV with header ip1,ip2 (analyze/export stages) "
            f"or ip1,ip2,count,label (infer stage), got {header!r}"
        )
    out = []
    for row_no, row in enumerate(r, start=2):
        if not row:
            continue
        if len(row) != cols:
            raise SchemaError(f"edge CSV row {row_no}: expected {cols} columns")
        try:
            out.append((PeerAddress.parse(row[0]), PeerAddress.parse(row[1])))
        except ValueError as exc:
            raise SchemaError(f"edge CSV row {row_no}: {exc}") from None
    return out
