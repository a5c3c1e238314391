"""Scoring inferred neighbor sets against ground truth.

For one observer: the benchmark set is the union of its known connection
snapshots inside the scoring window; the inferred set is every inferred edge
incident to the observer. Precision is the matched fraction of inferred
edges, recall the matched fraction of the benchmark.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import IO, Iterable, Sequence

from .errors import InputError
from .infer import InferredEdge
from .trace import GroundTruthSnapshot, PeerAddress


class EmptyBenchmarkError(InputError):
    """No ground-truth snapshot for the observer inside the window."""


class MetricUndefinedError(ValueError):
    """A ratio with a zero denominator; carries the metric name."""

    def __init__(self, metric: str, reason: str):
        self.metric = metric
        super().__init__(f"{metric} undefined: {reason}")


MATCH_MODES = ("ip", "ip-port")


def _match_key(addr: PeerAddress, mode: str) -> PeerAddress:
    if mode == "ip":
        return PeerAddress(addr.ip, 0)
    if mode == "ip-port":
        return addr
    raise ValueError(f"unknown match mode {mode!r}")


def truth_neighbor_set(
    snapshots: Iterable[GroundTruthSnapshot],
    observer: PeerAddress,
    window: tuple[int, int] | None = None,
    *,
    match: str = "ip",
) -> frozenset[PeerAddress]:
    """Union of the observer's connection snapshots inside ``window``.

    ``window`` is an inclusive (start, end) time range; None means all
    snapshots. Connections churn, so the union over the observation period
    is the set a frequency-based pass can be expected to recover.
    """
    key = _match_key(observer, match)
    found = False
    conns: set[PeerAddress] = set()
    for snap in snapshots:
        if _match_key(snap.node, match) != key:
            continue
        if window is not None and not window[0] <= snap.observed_at <= window[1]:
            continue
        found = True
        conns.update(_match_key(c, match) for c in snap.connections)
    if not found:
        raise EmptyBenchmarkError(
            f"no ground-truth snapshot for {observer} in window {window}"
        )
    return frozenset(conns)


@dataclass(frozen=True)
class ValidationReport:
    observer: PeerAddress
    window: tuple[int, int] | None
    inferred: int
    matched: int
    truth_size: int
    precision: float
    recall: float

    def to_json_dict(self) -> dict:
        return {
            "observer": str(self.observer),
            "window": list(self.window) if self.window else None,
            "inferred": self.inferred,
            "matched": self.matched,
            "truth_size": self.truth_size,
            "precision": self.precision,
            "recall": self.recall,
        }


def validate(
    inferred_edges: Iterable[InferredEdge] | Iterable[tuple[PeerAddress, PeerAddress]],
    truth: frozenset[PeerAddress],
    observer: PeerAddress,
    *,
    window: tuple[int, int] | None = None,
    match: str = "ip",
) -> ValidationReport:
    """Score inferred edges incident to ``observer`` against ``truth``.

    The incident set collapses edge direction: an edge touches the observer
    if either endpoint matches it under the match mode; the other endpoint
    is the candidate neighbor. Candidate sets are deduplicated before
    scoring. Raises MetricUndefinedError when a denominator is zero.
    """
    okey = _match_key(observer, match)
    candidates: set[PeerAddress] = set()
    for edge in inferred_edges:
        if isinstance(edge, InferredEdge):
            a, b = edge.ip1, edge.ip2
        else:
            a, b = edge
        ka, kb = _match_key(a, match), _match_key(b, match)
        if ka == okey and kb != okey:
            candidates.add(kb)
        elif kb == okey and ka != okey:
            candidates.add(ka)
    if not candidates:
        raise MetricUndefinedError(
            "precision", f"no inferred edges incident to {observer}"
        )
    if not truth:
        raise MetricUndefinedError("recall", f"benchmark for {observer} is empty")
    matched = len(candidates & truth)
    return ValidationReport(
        observer=observer,
        window=window,
        inferred=len(candidates),
        matched=matched,
        truth_size=len(truth),
        precision=matched / len(candidates),
        recall=matched / len(truth),
    )


def precision_recall(inferred: int, matched: int, truth_size: int) -> tuple[float, float]:
    """The two ratios from raw cell counts (used for table cross-checks)."""
    if inferred <= 0:
        raise MetricUndefinedError("precision", "no inferred edges")
    if truth_size <= 0:
        raise MetricUndefinedError("recall", "empty benchmark")
    return matched / inferred, matched / truth_size


def write_report_jsonl(reports: Sequence[ValidationReport], fp: IO[str]) -> None:
    for rep in reports:
        fp.write(json.dumps(rep.to_json_dict(), sort_keys=True) + "\n")


def format_report_table(reports: Sequence[ValidationReport]) -> str:
    """Fixed-width console table, one observer per column."""
    if not reports:
        return "(no observers validated)\n"
    headers = [str(r.observer) for r in reports]
    rows = [
        ("inferred", [str(r.inferred) for r in reports]),
        ("matched", [str(r.matched) for r in reports]),
        ("truth", [str(r.truth_size) for r in reports]),
        ("precision", [f"{r.precision * 100:.2f}%" for r in reports]),
        ("recall", [f"{r.recall * 100:.2f}%" for r in reports]),
    ]
    label_w = max(len(name) for name, _ in rows)
    col_w = [max(len(h), max(len(row[1][i]) for row in rows)) for i, h in enumerate(headers)]
    lines = [" " * label_w + "  " + "  ".join(h.rjust(col_w[i]) for i, h in enumerate(headers))]
    for name, cells in rows:
        lines.append(
            name.ljust(label_w) + "  "
            + "  ".join(c.rjust(col_w[i]) for i, c in enumerate(cells))
        )
    return "\n".join(lines) + "\n"
