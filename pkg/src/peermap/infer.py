"""Neighbor inference from advertisement frequency.

Direct partners of a node show up in nearly every peer list it sends, while
the rest of its whitelist rotates through the recency window and appears
several times less often. For each source, the counts of its advertised
addresses therefore separate into a high and a low frequency cluster; the
high cluster is labeled as the source's inferred neighbor set.

The split is an exact 1-D two-means: contiguous threshold on the sorted
distinct count values, minimizing within-cluster sum of squares, computed in
exact rational arithmetic so ties are real ties rather than float artifacts.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from fractions import Fraction
from typing import IO, Iterable, Sequence

from .errors import SchemaError
from .trace import PeerAddress, TripletTable


class DegenerateGroupError(ValueError):
    """All values identical (or a single value): no two-cluster structure."""


@dataclass(frozen=True)
class InferenceParams:
    """Knobs for the frequency-clustering pass.

    ``min_count`` drops pairs seen fewer times (one-off gossip noise);
    ``min_group`` skips sources with too few distinct advertised addresses
    for a frequency split to mean anything. ``weighted`` makes the split
    weight each distinct count value by its multiplicity instead of
    clustering the distinct values directly.
    """

    min_count: int = 2
    min_group: int = 8
    weighted: bool = False

    def __post_init__(self) -> None:
        if self.min_count < 1:
            raise ValueError(f"min_count must be >= 1, got {self.min_count}")
        if self.min_group < 1:
            raise ValueError(f"min_group must be >= 1, got {self.min_group}")


@dataclass(frozen=True)
class Split:
    """Result of a two-means split over count values.

    ``threshold`` separates the clusters: values strictly above it are the
    high cluster. ``cost`` is the exact within-cluster sum of squares.
    """

    threshold: Fraction
    low_mean: Fraction
    high_mean: Fraction
    cost: Fraction


def _cluster_cost(values: Sequence[int], weights: Sequence[int], lo: int, hi: int) -> tuple[Fraction, Fraction]:
    """(mean, within-cluster SS) for values[lo:hi], exact."""
    total_w = sum(weights[lo:hi])
    s1 = sum(v * w for v, w in zip(values[lo:hi], weights[lo:hi]))
    s2 = sum(v * v * w for v, w in zip(values[lo:hi], weights[lo:hi]))
    mean = Fraction(s1, total_w)
    return mean, Fraction(s2) - Fraction(s1 * s1, total_w)


def two_means_split(counts: Iterable[int], *, weighted: bool = False) -> Split:
    """Optimal 1-D two-means split of a multiset of counts.

    The optimum is always a threshold on the sorted distinct values (means
    order the clusters), so all k-1 contiguous splits are scanned with exact
    Fraction arithmetic. Ties on cost prefer the larger separation between
    cluster means, then the smaller high cluster. By default each distinct
    value participates once; ``weighted`` weights values by multiplicity.

    Raises DegenerateGroupError when there are fewer than two distinct values.
    """
    tally: dict[int, int] = {}
    for c in counts:
        tally[c] = tally.get(c, 0) + 1
    values = sorted(tally)
    if len(values) < 2:
        raise DegenerateGroupError(f"need >= 2 distinct values, got {len(values)}")
    weights = [tally[v] for v in values] if weighted else [1] * len(values)

    best: tuple[Fraction, Fraction, int] | None = None  # (cost, -gap, high size)
    best_split: Split | None = None
    for t in range(1, len(values)):
        low_mean, low_ss = _cluster_cost(values, weights, 0, t)
        high_mean, high_ss = _cluster_cost(values, weights, t, len(values))
        cost = low_ss + high_ss
        gap = high_mean - low_mean
        rank = (cost, -gap, len(values) - t)
        if best is None or rank < best:
            best = rank
            best_split = Split(
                threshold=Fraction(values[t - 1] + values[t], 2),
                low_mean=low_mean,
                high_mean=high_mean,
                cost=cost,
            )
    assert best_split is not None
    return best_split


def cluster_quality(counts: Iterable[int]) -> tuple[int, float]:
    """(min separation, mean gap) between the two clusters of a group.

    Min separation is the distance between the closest members of the two
    clusters; mean gap is the distance between cluster means. Both are over
    distinct count values. Raises DegenerateGroupError on degenerate groups.
    """
    tally = sorted(set(counts))
    split = two_means_split(tally)
    low = [v for v in tally if v <= split.threshold]
    high = [v for v in tally if v > split.threshold]
    return high[0] - low[-1], float(split.high_mean - split.low_mean)


@dataclass(frozen=True)
class InferredEdge:
    ip1: PeerAddress
    ip2: PeerAddress
    count: int
    label: int


@dataclass
class InferenceResult:
    """Labeled high-cluster rows plus bookkeeping about what was skipped."""

    edges: list[InferredEdge] = field(default_factory=list)
    skipped_sources: list[PeerAddress] = field(default_factory=list)
    degenerate_sources: list[PeerAddress] = field(default_factory=list)
    rows_seen: int = 0
    rows_after_count_filter: int = 0

    def edge_pairs(self) -> list[tuple[PeerAddress, PeerAddress]]:
        return [(e.ip1, e.ip2) for e in self.edges]


def infer_neighbors(table: TripletTable, params: InferenceParams = InferenceParams()) -> InferenceResult:
    """Run the full pass: count filter, group filter, per-source split.

    Sources whose groups are too small go to ``skipped_sources``; groups
    with no two-cluster structure (all counts equal) contribute no edges and
    are recorded in ``degenerate_sources``. Output rows are the high-cluster
    members per source, labeled 1, sorted by (ip1, ip2).
    """
    result = InferenceResult()
    groups: dict[PeerAddress, list[tuple[PeerAddress, int]]] = {}
    for (src, adv), count in table.counts.items():
        result.rows_seen += 1
        if count < params.min_count:
            continue
        result.rows_after_count_filter += 1
        groups.setdefault(src, []).append((adv, count))

    for src in sorted(groups):
        rows = groups[src]
        if len(rows) < params.min_group:
            result.skipped_sources.append(src)
            continue
        try:
            split = two_means_split((c for _, c in rows), weighted=params.weighted)
        except DegenerateGroupError:
            result.degenerate_sources.append(src)
            continue
        for adv, count in rows:
            if count > split.threshold:
                result.edges.append(InferredEdge(src, adv, count, 1))

    result.edges.sort(key=lambda e: (e.ip1, e.ip2))
    return result


INFERRED_HEADER = ["ip1", "ip2", "count", "label"]


def write_inferred_csv(result: InferenceResult, fp: IO[str]) -> None:
    w = csv.writer(fp, lineterminator="\n")
    w.writerow(INFERRED_HEADER)
    for e in result.edges:
        w.writerow([str(e.ip1), str(e.ip2), e.count, e.label])


def read_inferred_csv(fp: IO[str]) -> list[InferredEdge]:
    r = csv.reader(fp)
    header = next(r, None)
    if header != INFERRED_HEADER:
        raise SchemaError(
            f"expected inferred-edge CSV with header {','.join(INFERRED_HEADER)} "
            f"(produced by the infer stage), got {header!r}"
        )
    out = []
    for row_no, row in enumerate(r, start=2):
        if not row:
            continue
        if len(row) != 4:
            raise SchemaError(f"inferred CSV row {row_no}: expected 4 columns")
        try:
            out.append(InferredEdge(
                PeerAddress.parse(row[0]), PeerAddress.parse(row[1]),
                int(row[2]), int(row[3]),
            ))
        except ValueError as exc:
            raise SchemaError(f"inferred CSV row {row_no}: {exc}") from None
    return out
