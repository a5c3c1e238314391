"""Scoring inferred edges against ground-truth connection snapshots."""

import io

import pytest

from conftest import A
from peermap.infer import InferredEdge
from peermap.trace import GroundTruthSnapshot
from peermap.validate import (
    EmptyBenchmarkError,
    MetricUndefinedError,
    ValidationReport,
    format_report_table,
    precision_recall,
    truth_neighbor_set,
    validate,
    write_report_jsonl,
)


def snap(t, node, conns):
    return GroundTruthSnapshot(t, A(node), frozenset(A(c) for c in conns))


class TestTruthNeighborSet:
    def test_union_semantics(self):
        snaps = [
            snap(1, "10.0.0.1", ["10.0.0.2", "10.0.0.3"]),
            snap(2, "10.0.0.1", ["10.0.0.3", "10.0.0.4"]),
        ]
        got = truth_neighbor_set(snaps, A("10.0.0.1"))
        assert got == {A("10.0.0.2"), A("10.0.0.3"), A("10.0.0.4")}

    def test_window_filters(self):
        snaps = [
            snap(1, "10.0.0.1", ["10.0.0.2"]),
            snap(9, "10.0.0.1", ["10.0.0.4"]),
        ]
        assert truth_neighbor_set(snaps, A("10.0.0.1"), (0, 5)) == {A("10.0.0.2")}
        with pytest.raises(EmptyBenchmarkError):
            truth_neighbor_set(snaps, A("10.0.0.1"), (100, 200))

    def test_unknown_observer(self):
        with pytest.raises(EmptyBenchmarkError):
            truth_neighbor_set([snap(1, "10.0.0.1", [])], A("10.0.0.9"))

    def test_single_snapshot(self):
        snaps = [snap(1, "10.0.0.1", ["10.0.0.2"])]
        assert truth_neighbor_set(snaps, A("10.0.0.1")) == {A("10.0.0.2")}

    def test_ip_match_ignores_ports(self):
        snaps = [snap(1, "10.0.0.1:18080", ["10.0.0.2:18080"])]
        got = truth_neighbor_set(snaps, A("10.0.0.1"), match="ip")
        assert got == {A("10.0.0.2")}


def edge(a, b, count=10):
    return InferredEdge(A(a), A(b), count, 1)


class TestValidate:
    def test_basic_scoring(self):
        edges = [
            edge("10.0.0.1:18080", "10.0.0.2:18080"),
            edge("10.0.0.1:18080", "10.0.0.3:18080"),
            edge("10.0.0.4:18080", "10.0.0.1:18080"),  # reversed orientation counts too
            edge("10.0.0.5:18080", "10.0.0.6:18080"),  # not incident, ignored
        ]
        truth = frozenset({A("10.0.0.2"), A("10.0.0.4"), A("10.0.0.9")})
        rep = validate(edges, truth, A("10.0.0.1"))
        assert rep.inferred == 3
        assert rep.matched == 2
        assert rep.truth_size == 3
        assert rep.precision == pytest.approx(2 / 3)
        assert rep.recall == pytest.approx(2 / 3)

    def test_plain_pairs_accepted(self):
        rep = validate(
            [(A("10.0.0.1"), A("10.0.0.2"))],
            frozenset({A("10.0.0.2")}),
            A("10.0.0.1"),
        )
        assert rep.precision == 1.0 and rep.recall == 1.0

    def test_candidates_deduplicated(self):
        edges = [
            edge("10.0.0.1:18080", "10.0.0.2:18080"),
            edge("10.0.0.2:18080", "10.0.0.1:18080"),
        ]
        rep = validate(edges, frozenset({A("10.0.0.2")}), A("10.0.0.1"))
        assert rep.inferred == 1

    def test_no_incident_edges_undefined_precision(self):
        with pytest.raises(MetricUndefinedError) as exc:
            validate([edge("10.0.0.5:1", "10.0.0.6:1")], frozenset({A("10.0.0.2")}), A("10.0.0.1"))
        assert exc.value.metric == "precision"

    def test_empty_truth_undefined_recall(self):
        with pytest.raises(MetricUndefinedError) as exc:
            validate([edge("10.0.0.1:1", "10.0.0.2:1")], frozenset(), A("10.0.0.1"))
        assert exc.value.metric == "recall"

    def test_ip_port_match_mode(self):
        edges = [edge("10.0.0.1:18080", "10.0.0.2:18080")]
        truth_ports = frozenset({A("10.0.0.2:18080")})
        rep = validate(edges, truth_ports, A("10.0.0.1:18080"), match="ip-port")
        assert rep.matched == 1
        # same truth with a different port fails to match in ip-port mode
        truth_other = frozenset({A("10.0.0.2:9999")})
        rep2 = validate(edges, truth_other, A("10.0.0.1:18080"), match="ip-port")
        assert rep2.matched == 0

    def test_self_edges_do_not_count(self):
        edges = [edge("10.0.0.1:1", "10.0.0.1:2")]  # both endpoints same ip
        with pytest.raises(MetricUndefinedError):
            validate(edges, frozenset({A("10.0.0.2")}), A("10.0.0.1"), match="ip")


class TestTablePairs:
    # published measurement-table cells: (inferred, matched, precision %)
    CELLS = [
        (489, 388, 79.35),
        (534, 367, 68.73),
        (534, 371, 69.48),
        (394, 327, 82.99),
        (437, 319, 73.00),
        (713, 572, 80.22),
    ]

    @pytest.mark.parametrize("inferred,matched,expected", CELLS)
    def test_precision_cells(self, inferred, matched, expected):
        precision, _ = precision_recall(inferred, matched, truth_size=matched)
        assert abs(precision * 100 - expected) <= 0.01

    def test_precision_recall_guard(self):
        with pytest.raises(MetricUndefinedError):
            precision_recall(0, 0, 5)
        with pytest.raises(MetricUndefinedError):
            precision_recall(5, 0, 0)


class TestReporting:
    def make_report(self):
        return ValidationReport(A("10.0.0.1"), None, 10, 8, 9, 0.8, 8 / 9)

    def test_json_dict(self):
        d = self.make_report().to_json_dict()
        assert d["observer"] == "10.0.0.1"
        assert d["precision"] == 0.8
        assert d["window"] is None

    def test_jsonl_writer(self):
        buf = io.StringIO()
        write_report_jsonl([self.make_report()], buf)
        assert buf.getvalue().count("\n") == 1
        assert '"observer": "10.0.0.1"' in buf.getvalue()

    def test_table_format(self):
        text = format_report_table([self.make_report()])
        assert "10.0.0.1" in text
        assert "80.00%" in text
        assert "88.89%" in text
