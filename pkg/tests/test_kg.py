import io

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pathkeep import (
    EmptyGraphError,
    IngestConfig,
    IngestError,
    KnowledgeGraph,
    SnapshotError,
    default_templates,
    ingest_conceptnet,
    load_fixture,
    merge_relation,
)

from conftest import graph_from_edges


class TestMergeRelation:
    @pytest.mark.parametrize(
        "raw,canonical,surface",
        [
            ("/r/Antonym", "antonym", "is the antonym of"),
            ("/r/DistinctFrom", "antonym", "is the antonym of"),
            ("/r/AtLocation", "atlocation", "is at location of"),
            ("/r/LocatedNear", "atlocation", "is at location of"),
            ("/r/Causes", "causes", "causes"),
            ("/r/CausesDesire", "causes", "causes"),
            ("/r/MotivatedByGoal", "causes", "causes"),
            ("MotivatedBy", "causes", "causes"),
            ("/r/RelatedTo", "relatedto", "is related to"),
            ("/r/SimilarTo", "relatedto", "is related to"),
            ("/r/Synonym", "relatedto", "is related to"),
            ("/r/IsA", "isa", "is a type of"),
            ("/r/InstanceOf", "isa", "is a type of"),
            ("/r/DefinedAs", "isa", "is a type of"),
        ],
    )
    def test_merge_groups(self, raw, canonical, surface):
        rel = merge_relation(raw)
        assert rel.canonical_name == canonical
        assert rel.surface_text == surface

    def test_known_unmerged_relation_keeps_its_own_template(self):
        rel = merge_relation("/r/UsedFor")
        assert rel.canonical_name == "used_for"
        assert rel.surface_text == "is used for"

    def test_unknown_relation_passes_through_with_auto_template(self):
        rel = merge_relation("FrobnicatesWith")
        assert rel.canonical_name == "frobnicates_with"
        assert rel.surface_text == "is frobnicates with"
        assert rel.inverse_surface_text == "is the inverse-frobnicates_with of"

    def test_unknown_relation_starting_with_is_does_not_stutter(self):
        rel = merge_relation("IsBlessedBy")
        assert rel.surface_text == "is blessed by"

    def test_namespaced_relation(self):
        rel = merge_relation("/r/dbpedia/genre")
        assert rel.canonical_name == "dbpedia_genre"
        assert rel.surface_text == "is dbpedia genre"

    def test_empty_name_rejected(self):
        with pytest.raises(ValueError):
            merge_relation("  ")

    def test_idempotent_on_canonical_names(self):
        for raw in ["/r/DistinctFrom", "/r/UsedFor", "SomethingNew", "/r/dbpedia/genre"]:
            once = merge_relation(raw)
            twice = merge_relation(once.canonical_name)
            assert twice == once

    @given(st.text(alphabet="abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_", min_size=1, max_size=20))
    def test_idempotence_property(self, raw):
        if not raw.strip("_"):
            return
        once = merge_relation(raw)
        assert merge_relation(once.canonical_name) == once


def dump_line(rel, start, end, meta='{"weight": 1.0}'):
    return f"/a/[{rel}/,{start}/,{end}/]\t{rel}\t{start}\t{end}\t{meta}"


class TestIngest:
    def test_basic_edge_kept(self):
        lines = [dump_line("/r/RelatedTo", "/c/en/car", "/c/en/traffic")]
        graph, report = ingest_conceptnet(lines)
        assert graph.node_count == 2
        assert graph.edge_count == 1
        edge = next(iter(graph.edges()))
        assert (edge.head_label, edge.relation.canonical_name, edge.tail_label) == (
            "car",
            "relatedto",
            "traffic",
        )
        assert report.kept == 1 and report.total == 1

    def test_counters_and_invariant(self):
        lines = [
            dump_line("/r/RelatedTo", "/c/en/car", "/c/en/traffic"),
            dump_line("/r/RelatedTo", "/c/fr/voiture", "/c/en/traffic"),
            dump_line("/r/RelatedTo", "/c/en/car", "/c/en/traffic"),  # duplicate
            dump_line("/r/IsA", "/c/en/car/n", "/c/en/car"),  # self loop after normalization
            "only\ttwo",
            "",
            dump_line("/r/UsedFor", "/c/en/office", "/c/en/finish_jobs/v"),
        ]
        graph, report = ingest_conceptnet(lines)
        assert report.total == 7
        assert report.kept == 2
        assert report.non_english == 1
        assert report.malformed == 2
        assert report.dedup == 1
        assert report.self_loops == 1
        assert report.total == (
            report.kept + report.non_english + report.malformed + report.dedup + report.self_loops
        )
        assert graph.has_node("finish_jobs")  # sense suffix stripped

    def test_relation_merging_dedups_across_raw_names(self):
        lines = [
            dump_line("/r/Synonym", "/c/en/car", "/c/en/auto"),
            dump_line("/r/SimilarTo", "/c/en/car", "/c/en/auto"),
        ]
        graph, report = ingest_conceptnet(lines)
        assert graph.edge_count == 1
        assert report.dedup == 1

    def test_weight_parsing_and_clamp(self):
        lines = [
            dump_line("/r/RelatedTo", "/c/en/a", "/c/en/b", '{"weight": 2.5}'),
            dump_line("/r/RelatedTo", "/c/en/b", "/c/en/c", '{"weight": -4}'),
            dump_line("/r/RelatedTo", "/c/en/c", "/c/en/d", "not json"),
            dump_line("/r/RelatedTo", "/c/en/d", "/c/en/e", "{}"),
        ]
        graph, _ = ingest_conceptnet(lines)
        weights = {(e.head_label, e.tail_label): e.weight for e in graph.edges()}
        assert weights[("a", "b")] == 2.5
        assert weights[("b", "c")] == 0.01
        assert weights[("c", "d")] == 1.0
        assert weights[("d", "e")] == 1.0

    def test_bad_concept_uri_is_malformed(self):
        lines = [
            dump_line("/r/RelatedTo", "garbage", "/c/en/b"),
            dump_line("/r/RelatedTo", "/c/en/a", "/c/en/b"),
        ]
        _, report = ingest_conceptnet(lines)
        assert report.malformed == 1 and report.kept == 1

    def test_strict_mode_aborts_with_line_number(self):
        lines = [
            dump_line("/r/RelatedTo", "/c/en/a", "/c/en/b"),
            "short\tline",
        ]
        with pytest.raises(IngestError) as err:
            ingest_conceptnet(lines, IngestConfig(strict=True))
        assert err.value.line_number == 2
        assert "line 2" in str(err.value)

    def test_empty_graph_is_an_error(self):
        with pytest.raises(EmptyGraphError):
            ingest_conceptnet([dump_line("/r/RelatedTo", "/c/fr/a", "/c/fr/b")])

    def test_deterministic_serialization(self):
        lines = [
            dump_line("/r/RelatedTo", "/c/en/car", "/c/en/traffic"),
            dump_line("/r/UsedFor", "/c/en/office", "/c/en/work"),
        ]
        g1, _ = ingest_conceptnet(list(lines))
        g2, _ = ingest_conceptnet(list(lines))
        assert g1.serialize() == g2.serialize()


class TestFixture:
    def test_two_line_fixture(self):
        graph, _ = load_fixture(io.StringIO("people\tatlocation\toffice\noffice\tusedfor\tfinish_jobs\n"))
        assert graph.node_count == 3
        assert graph.edge_count == 2

    def test_duplicate_line_collapses(self):
        graph, report = load_fixture(["a\trelatedto\tb", "a\trelatedto\tb"])
        assert graph.edge_count == 1
        assert report.dedup == 1

    def test_column_mismatch_names_line(self):
        with pytest.raises(IngestError) as err:
            load_fixture(["a\trelatedto\tb", "a\tb"])
        assert err.value.line_number == 2

    def test_empty_stream_is_an_error(self):
        with pytest.raises(EmptyGraphError):
            load_fixture([])


class TestNeighbors:
    def test_out_in_both_ordering(self):
        graph, _ = load_fixture(["people\tatlocation\toffice", "office\tusedfor\tfinish_jobs"])
        people = graph.node_id("people")
        office = graph.node_id("office")
        finish = graph.node_id("finish_jobs")

        out = graph.neighbors(people, "out")
        assert [(e.head_label, e.tail_label) for e in out] == [("people", "office")]
        assert graph.neighbors(finish, "out") == []

        both = graph.neighbors(office, "both")
        assert [(e.head_label, e.tail_label) for e in both] == [
            ("office", "finish_jobs"),  # out edges first
            ("people", "office"),
        ]

    def test_sorted_by_relation_then_neighbor_label(self):
        graph = graph_from_edges(
            [
                ("hub", "usedfor", "zeta"),
                ("hub", "usedfor", "alpha"),
                ("hub", "atlocation", "midway"),
            ]
        )
        out = graph.neighbors(graph.node_id("hub"), "out")
        assert [(e.relation.canonical_name, e.tail_label) for e in out] == [
            ("atlocation", "midway"),
            ("used_for", "alpha"),
            ("used_for", "zeta"),
        ]

    def test_unknown_node_or_direction(self):
        graph = graph_from_edges([("a", "relatedto", "b")])
        with pytest.raises(KeyError):
            graph.neighbors(99)
        with pytest.raises(ValueError):
            graph.neighbors(0, "sideways")


class TestSnapshot:
    def test_round_trip_preserves_everything(self, tmp_path):
        graph = graph_from_edges(
            [
                ("people", "atlocation", "office"),
                ("office", "usedfor", "finish_jobs"),
                ("work", "antonym", "unemployment"),
            ]
        )
        path = tmp_path / "graph.snap"
        graph.save(path)
        loaded = KnowledgeGraph.load(path)
        assert list(loaded.labels()) == list(graph.labels())
        assert loaded.edge_count == graph.edge_count
        for node in range(graph.node_count):
            for direction in ("out", "in", "both"):
                assert loaded.neighbors(node, direction) == graph.neighbors(node, direction)
        assert loaded.template_hash == default_templates().version_hash

    def test_template_hash_is_pinned(self, tmp_path):
        graph = graph_from_edges([("a", "relatedto", "b")])
        data = bytearray(graph.serialize())
        # corrupt one hex digit of the embedded template hash
        data[8] = ord("0") if data[8] != ord("0") else ord("1")
        path = tmp_path / "tampered.snap"
        path.write_bytes(bytes(data))
        with pytest.raises(SnapshotError):
            KnowledgeGraph.load(path)
        assert KnowledgeGraph.load(path, check_templates=False).edge_count == 1

    def test_garbage_rejected(self, tmp_path):
        path = tmp_path / "nonsense.snap"
        path.write_bytes(b"this is not a snapshot")
        with pytest.raises(SnapshotError):
            KnowledgeGraph.load(path)


@st.composite
def edge_lists(draw):
    labels = ["ant", "bee", "cat", "dog", "elk", "fox"]
    relations = ["relatedto", "isa", "usedfor"]
    n = draw(st.integers(min_value=1, max_value=12))
    triples = []
    for _ in range(n):
        head = draw(st.sampled_from(labels))
        tail = draw(st.sampled_from([l for l in labels if l != head]))
        triples.append((head, draw(st.sampled_from(relations)), tail))
    return triples


@given(edge_lists())
@settings(max_examples=60)
def test_adjacency_sums_equal_edge_count(triples):
    graph = graph_from_edges(triples)
    out_total = sum(len(graph.neighbors(n, "out")) for n in range(graph.node_count))
    in_total = sum(len(graph.neighbors(n, "in")) for n in range(graph.node_count))
    assert out_total == graph.edge_count == in_total


@given(edge_lists())
@settings(max_examples=40)
def test_serialize_round_trip_property(triples):
    graph = graph_from_edges(triples)
    clone = KnowledgeGraph.deserialize(graph.serialize())
    assert clone.serialize() == graph.serialize()
    for node in range(graph.node_count):
        assert clone.neighbors(node, "both") == graph.neighbors(node, "both")
