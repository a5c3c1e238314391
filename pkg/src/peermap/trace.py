"""Observation data model: addresses, peer-list packets, and aggregation.

Everything downstream (inference, validation, graph analysis) works on the
types defined here. A *trace* is a JSONL stream of peer-list observations; a
*triplet table* counts, for every (source, advertised address) pair, how many
packets from that source contained the address.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator

from .errors import InputError, SchemaError, TraceParseError

# Cap on entries in a single peer-list packet. Stock nodes never send more;
# a longer list in a capture means a modified or hostile peer.
PROTOCOL_MAX_PEERS = 250


class UnknownSourceError(LookupError):
    """Asked about a source that never appears in the table."""


@dataclass(frozen=True, order=True)
class PeerAddress:
    """An IPv4 endpoint. ``port`` 0 means the port is unknown/irrelevant.

    Ordering is lexicographic on octets, then port, which is what every
    sorted output in the package uses (never string order, where
    "10.0.0.9" would sort after "10.0.0.10").
    """

    ip: tuple[int, int, int, int]
    port: int = 0

    def __post_init__(self) -> None:
        if len(self.ip) != 4 or not all(0 <= o <= 255 for o in self.ip):
            raise ValueError(f"bad IPv4 octets: {self.ip!r}")
        if not 0 <= self.port <= 65535:
            raise ValueError(f"bad port: {self.port!r}")

    @classmethod
    def parse(cls, text: str) -> "PeerAddress":
        """Parse ``"a.b.c.d"`` or ``"a.b.c.d:port"``."""
        host, sep, port_part = text.partition(":")
        octets = host.split(".")
        if len(octets) != 4:
            raise ValueError(f"not a dotted quad: {text!r}")
        try:
            ip = tuple(int(o) for o in octets)
        except ValueError:
            raise ValueError(f"non-numeric octet in {text!r}") from None
        port = 0
        if sep:
            try:
                port = int(port_part)
            except ValueError:
                raise ValueError(f"non-numeric port in {text!r}") from None
        return cls(ip, port)  # type: ignore[arg-type]

    @property
    def ip_text(self) -> str:
        return ".".join(str(o) for o in self.ip)

    def __str__(self) -> str:
        if self.port:
            return f"{self.ip_text}:{self.port}"
        return self.ip_text


@dataclass(frozen=True)
class PeerListObservation:
    """One peer-list packet: ``source`` sent ``peers`` to ``observer``.

    ``peers`` holds no duplicates; repeated addresses in the raw packet are
    collapsed on construction (presence is what gets counted later, so a
    duplicate carries no extra information and must not be double counted).
    """

    observed_at: int
    observer: PeerAddress
    source: PeerAddress
    peers: tuple[PeerAddress, ...]

    @classmethod
    def from_raw(
        cls,
        observed_at: int,
        observer: PeerAddress,
        source: PeerAddress,
        raw_peers: Iterable[PeerAddress],
        max_peers: int = PROTOCOL_MAX_PEERS,
    ) -> "PeerListObservation":
        raw = list(raw_peers)
        if len(raw) > max_peers:
            raise TraceParseError(
                f"peer list has {len(raw)} entries, protocol cap is {max_peers}",
                field="peers",
            )
        seen: dict[PeerAddress, None] = {}
        for p in raw:
            seen.setdefault(p)
        return cls(observed_at, observer, source, tuple(seen))


def parse_trace_line(line: str, max_peers: int = PROTOCOL_MAX_PEERS) -> PeerListObservation:
    """Parse one JSONL trace record.

    Raises TraceParseError naming the offending field; the caller adds line
    numbers (see ``load_trace``).
    """
    try:
        rec = json.loads(line)
    except json.JSONDecodeError as exc:
        raise TraceParseError(f"not valid JSON: {exc.msg}") from None
    if not isinstance(rec, dict):
        raise TraceParseError("record is not a JSON object")
    for key in ("t", "observer", "source", "peers"):
        if key not in rec:
            raise TraceParseError(f"missing field {key!r}", field=key)
    if not isinstance(rec["t"], int) or isinstance(rec["t"], bool):
        raise TraceParseError("field 't' must be an integer", field="t")
    if not isinstance(rec["peers"], list):
        raise TraceParseError("field 'peers' must be a list", field="peers")

    def addr(value: object, fieldname: str) -> PeerAddress:
        if not isinstance(value, str):
            raise TraceParseError(f"field {fieldname!r} must be a string", field=fieldname)
        try:
            return PeerAddress.parse(value)
        except ValueError as exc:
            raise TraceParseError(f"field {fieldname!r}: {exc}", field=fieldname) from None

    peers = [addr(p, f"peers[{i}]") for i, p in enumerate(rec["peers"])]
    return PeerListObservation.from_raw(
        rec["t"],
        addr(rec["observer"], "observer"),
        addr(rec["source"], "source"),
        peers,
        max_peers=max_peers,
    )


def load_trace(fp: IO[str], max_peers: int = PROTOCOL_MAX_PEERS) -> Iterator[PeerListObservation]:
    """Stream observations from a JSONL file, annotating errors with line numbers."""
    for line_no, line in enumerate(fp, start=1):
        if not line.strip():
            continue
        try:
            yield parse_trace_line(line, max_peers=max_peers)
        except TraceParseError as exc:
            raise TraceParseError(str(exc), line_no=line_no, field=exc.field) from None


def write_trace(observations: Iterable[PeerListObservation], fp: IO[str]) -> int:
    """Write observations as compact JSONL. Returns the number of records."""
    n = 0
    for obs in observations:
        peers = ",".join(f'"{p}"' for p in obs.peers)
        fp.write(f'{{"t":{obs.observed_at},"observer":"{obs.observer}",'
                 f'"source":"{obs.source}","peers":[{peers}]}}\n')
        n += 1
    return n


# ---------------------------------------------------------------------------
# Aggregation
# ---------------------------------------------------------------------------

@dataclass
class TripletTable:
    """Directed presence counts plus per-source packet totals.

    ``counts[(s, a)]`` is the number of packets from source ``s`` whose peer
    list contained ``a``. ``packet_totals[s]`` is the number of packets from
    ``s``; it is empty when the table was loaded from a CSV that carries no
    totals, in which case ``relative_presence`` is unavailable.
    """

    counts: dict[tuple[PeerAddress, PeerAddress], int] = field(default_factory=dict)
    packet_totals: dict[PeerAddress, int] = field(default_factory=dict)

    def count(self, source: PeerAddress, address: PeerAddress) -> int:
        return self.counts.get((source, address), 0)

    def rows(self) -> list[tuple[PeerAddress, PeerAddress, int]]:
        return [(s, a, c) for (s, a), c in sorted(self.counts.items())]

    def sources(self) -> list[PeerAddress]:
        return sorted({s for s, _ in self.counts})


def aggregate(
    observations: Iterable[PeerListObservation],
    exclude: frozenset[PeerAddress] | set[PeerAddress] = frozenset(),
) -> TripletTable:
    """Fold observations into a triplet table.

    ``exclude`` drops whole observations by source before counting. An entry
    with port 0 acts as an IP wildcard, matching any port; an entry with a
    port matches exactly. The fold is order-independent and associative, so
    large traces can be aggregated shard by shard and the tables merged.
    """
    exact = {e for e in exclude if e.port != 0}
    wild = {e.ip for e in exclude if e.port == 0}
    table = TripletTable()
    counts = table.counts
    totals = table.packet_totals
    for obs in observations:
        src = obs.source
        if src in exact or src.ip in wild:
            continue
        totals[src] = totals.get(src, 0) + 1
        for a in obs.peers:
            key = (src, a)
            counts[key] = counts.get(key, 0) + 1
    return table


def relative_presence(table: TripletTable, source: PeerAddress, address: PeerAddress) -> float:
    """Fraction of packets from ``source`` that advertised ``address``."""
    if source not in table.packet_totals:
        raise UnknownSourceError(str(source))
    total = table.packet_totals[source]
    if total == 0:
        raise UnknownSourceError(str(source))
    return table.count(source, address) / total


TRIPLET_HEADER = ["ip1", "ip2", "count"]
TOTALS_HEADER = ["source", "packets"]


def write_triplets_csv(table: TripletTable, fp: IO[str]) -> None:
    w = csv.writer(fp, lineterminator="\n")
    w.writerow(TRIPLET_HEADER)
    for s, a, c in table.rows():
        w.writerow([str(s), str(a), c])


def write_packet_totals_csv(table: TripletTable, fp: IO[str]) -> None:
    w = csv.writer(fp, lineterminator="\n")
    w.writerow(TOTALS_HEADER)
    for s in sorted(table.packet_totals):
        w.writerow([str(s), table.packet_totals[s]])


def read_triplets_csv(fp: IO[str]) -> TripletTable:
    """Load a triplet CSV (as written by the ingest stage; no packet totals)."""
    r = csv.reader(fp)
    header = next(r, None)
    if header != TRIPLET_HEADER:
        raise SchemaError(
            f"expected triplet CSV with header {','.join(TRIPLET_HEADER)} "
            f"(produced by the ingest stage), got {header!r}"
        )
    table = TripletTable()
    for row_no, row in enumerate(r, start=2):
        if not row:
            continue
        if len(row) != 3:
            raise SchemaError(f"triplet CSV row {row_no}: expected 3 columns, got {len(row)}")
        try:
            s = PeerAddress.parse(row[0])
            a = PeerAddress.parse(row[1])
            c = int(row[2])
        except ValueError as exc:
            raise SchemaError(f"triplet CSV row {row_no}: {exc}") from None
        if c < 1:
            raise SchemaError(f"triplet CSV row {row_no}: count must be >= 1, got {c}")
        key = (s, a)
        if key in table.counts:
            raise SchemaError(f"triplet CSV row {row_no}: duplicate pair {s} -> {a}")
        table.counts[key] = c
    return table


def read_packet_totals_csv(fp: IO[str]) -> dict[PeerAddress, int]:
    r = csv.reader(fp)
    header = next(r, None)
    if header != TOTALS_HEADER:
        raise SchemaError(
            f"expected packet totals CSV with header {','.join(TOTALS_HEADER)}, got {header!r}"
        )
    totals: dict[PeerAddress, int] = {}
    for row_no, row in enumerate(r, start=2):
        if not row:
            continue
        try:
            totals[PeerAddress.parse(row[0])] = int(row[1])
        except (ValueError, IndexError) as exc:
            raise SchemaError(f"packet totals CSV row {row_no}: {exc}") from None
    return totals


# ---------------------------------------------------------------------------
# Ground truth
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GroundTruthSnapshot:
    """Known connection set of one node at one instant."""

    observed_at: int
    node: PeerAddress
    connections: frozenset[PeerAddress]


def parse_ground_truth_line(line: str) -> GroundTruthSnapshot:
    try:
        rec = json.loads(line)
    except json.JSONDecodeError as exc:
        raise TraceParseError(f"not valid JSON: {exc.msg}") from None
    if not isinstance(rec, dict):
        raise TraceParseError("record is not a JSON object")
    for key in ("t", "node", "connections"):
        if key not in rec:
            raise TraceParseError(f"missing field {key!r}", field=key)
    if not isinstance(rec["t"], int) or isinstance(rec["t"], bool):
        raise TraceParseError("field 't' must be an integer", field="t")
    if not isinstance(rec["node"], str):
        raise TraceParseError("field 'node' must be a string", field="node")
    if not isinstance(rec["connections"], list):
        raise TraceParseError("field 'connections' must be a list", field="connections")
    try:
        node = PeerAddress.parse(rec["node"])
    except ValueError as exc:
        raise TraceParseError(f"field 'node': {exc}", field="node") from None
    conns = set()
    for i, c in enumerate(rec["connections"]):
        if not isinstance(c, str):
            raise TraceParseError("connection entries must be strings", field=f"connections[{i}]")
        try:
            conns.add(PeerAddress.parse(c))
        except ValueError as exc:
            raise TraceParseError(f"field 'connections[{i}]': {exc}", field=f"connections[{i}]") from None
    if node in conns:
        raise TraceParseError("node appears in its own connection list", field="connections")
    return GroundTruthSnapshot(rec["t"], node, frozenset(conns))


def load_ground_truth(fp: IO[str]) -> list[GroundTruthSnapshot]:
    """Load snapshots, sorted by observation time (stable for equal times)."""
    snaps = []
    for line_no, line in enumerate(fp, start=1):
        if not line.strip():
            continue
        try:
            snaps.append(parse_ground_truth_line(line))
        except TraceParseError as exc:
            raise TraceParseError(str(exc), line_no=line_no, field=exc.field) from None
    snaps.sort(key=lambda s: s.observed_at)
    return snaps


def write_ground_truth(snapshots: Iterable[GroundTruthSnapshot], fp: IO[str]) -> int:
    n = 0
    for snap in snapshots:
        conns = ",".join(f'"{c}"' for c in sorted(snap.connections))
        fp.write(f'{{"t":{snap.observed_at},"node":"{snap.node}","connections":[{conns}]}}\n')
        n += 1
    return n


def check_nonempty(items: list, what: str) -> list:
    if not items:
        raise InputError(f"no {what} found in input")
    return items
