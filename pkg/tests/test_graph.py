import json

import pytest

from callfuse.graph import (
    CallEdge,
    FunctionNode,
    GraphDocumentError,
    GraphValidationError,
    HybridCallGraph,
    SourcePosition,
    parse_graph_document,
    serialize_graph,
    validate_graph,
)


def pos(text):
    return SourcePosition.parse(text)


def make_graph(node_specs, edge_specs, tool_ids=None):
    nodes = [FunctionNode(id=pos(p)) for p in node_specs]
    edges = [
        CallEdge(pos(s), pos(t), frozenset(tools), conf)
        for s, t, tools, conf in edge_specs
    ]
    return HybridCallGraph.build(nodes, edges, tool_ids)


class TestParse:
    def test_two_nodes_one_edge_round_trip(self):
        doc = json.dumps(
            {
                "nodes": [
                    {"pos": "a.js:1:1", "entry": False, "final": False},
                    {"pos": "a.js:5:1", "entry": False, "final": False},
                ],
                "edges": [
                    {
                        "source": "a.js:1:1",
                        "target": "a.js:5:1",
                        "found_by": ["static-ast"],
                        "confidence": 0.5,
                    }
                ],
            }
        )
        g = parse_graph_document(doc)
        assert len(g.nodes) == 2
        assert len(g.edges) == 1
        assert g.edges[0].confidence == 0.5
        assert g.edges[0].found_by == frozenset({"static-ast"})
        assert g.tool_ids == frozenset({"static-ast"})

    def test_dangling_edge_endpoint_rejected(self):
        doc = json.dumps(
            {
                "nodes": [{"pos": "a.js:1:1"}],
                "edges": [
                    {
                        "source": "a.js:1:1",
                        "target": "b.js:9:9",
                        "found_by": ["t"],
                        "confidence": 1.0,
                    }
                ],
            }
        )
        with pytest.raises(GraphValidationError, match=r"b\.js:9:9"):
            parse_graph_document(doc)

    def test_malformed_json_reports_position(self):
        with pytest.raises(GraphDocumentError, match=r"line \d+, offset \d+"):
            parse_graph_document(b'{"nodes": [,]}')

    def test_unknown_fields_ignored_with_warning(self, caplog):
        doc = json.dumps(
            {
                "nodes": [{"pos": "a.js:1:1", "color": "red"}],
                "edges": [],
                "version": 3,
            }
        )
        with caplog.at_level("WARNING", logger="callfuse.graph"):
            g = parse_graph_document(doc)
        assert len(g.nodes) == 1
        assert "color" in caplog.text
        assert "version" in caplog.text

    def test_paths_normalized_at_parse(self):
        doc = json.dumps({"nodes": [{"pos": "./lib\\a.js:3:2"}], "edges": []})
        g = parse_graph_document(doc)
        assert g.nodes[0].id == SourcePosition("lib/a.js", 3, 2)

    def test_confidence_out_of_range_rejected(self):
        doc = json.dumps(
            {
                "nodes": [{"pos": "a.js:1:1"}, {"pos": "a.js:2:1"}],
                "edges": [
                    {
                        "source": "a.js:1:1",
                        "target": "a.js:2:1",
                        "found_by": ["t"],
                        "confidence": 1.5,
                    }
                ],
            }
        )
        with pytest.raises(GraphValidationError, match="confidence"):
            parse_graph_document(doc)

    def test_duplicate_edge_rejected(self):
        doc = json.dumps(
            {
                "nodes": [{"pos": "a.js:1:1"}, {"pos": "a.js:2:1"}],
                "edges": [
                    {"source": "a.js:1:1", "target": "a.js:2:1", "found_by": ["t"]},
                    {"source": "a.js:1:1", "target": "a.js:2:1", "found_by": ["u"]},
                ],
            }
        )
        with pytest.raises(GraphValidationError, match="duplicate edge"):
            parse_graph_document(doc)


class TestSerialize:
    def test_empty_graph(self):
        g = HybridCallGraph.build([], [])
        data = json.loads(serialize_graph(g))
        assert data == {"nodes": [], "edges": []}

    def test_determinism(self):
        g = make_graph(
            ["b.js:2:1", "a.js:1:1"],
            [("b.js:2:1", "a.js:1:1", ["z", "a"], 0.25)],
        )
        assert serialize_graph(g) == serialize_graph(g)

    def test_node_and_edge_ordering(self):
        g = make_graph(
            ["b.js:1:1", "a.js:2:5", "a.js:2:3", "a.js:1:9"],
            [
                ("b.js:1:1", "a.js:1:9", ["t"], 0.1),
                ("a.js:1:9", "b.js:1:1", ["t"], 0.1),
            ],
        )
        data = json.loads(serialize_graph(g))
        assert [n["pos"] for n in data["nodes"]] == [
            "a.js:1:9",
            "a.js:2:3",
            "a.js:2:5",
            "b.js:1:1",
        ]
        assert [e["source"] for e in data["edges"]] == ["a.js:1:9", "b.js:1:1"]

    def test_round_trip_is_identity(self, fixtures_dir):
        raw = (fixtures_dir / "graph_fixture.json").read_bytes()
        g = parse_graph_document(raw)
        again = parse_graph_document(serialize_graph(g))
        assert again == g
        assert len(again.edges) == len(g.edges)

    def test_fixture_matches_golden_file(self, fixtures_dir):
        # Golden bytes produced once by a hand-checked serializer run, then frozen.
        raw = (fixtures_dir / "graph_fixture.json").read_bytes()
        golden = (fixtures_dir / "graph_fixture.golden.json").read_bytes()
        assert serialize_graph(parse_graph_document(raw)) == golden
        # The golden file is itself canonical: serialize(parse(golden)) == golden.
        assert serialize_graph(parse_graph_document(golden)) == golden


class TestValidate:
    def test_valid_fixture_has_no_violations(self, fixtures_dir):
        g = parse_graph_document((fixtures_dir / "graph_fixture.json").read_bytes())
        assert validate_graph(g) == []

    def test_confidence_violation_names_edge(self):
        g = make_graph(
            ["a.js:1:1", "a.js:2:1"],
            [("a.js:1:1", "a.js:2:1", ["t"], 1.5)],
        )
        violations = validate_graph(g)
        assert len(violations) == 1
        assert "a.js:1:1 -> a.js:2:1" in violations[0]
        assert "1.5" in violations[0]

    def test_duplicate_pair_is_one_violation(self):
        g = make_graph(
            ["a.js:1:1", "a.js:2:1"],
            [
                ("a.js:1:1", "a.js:2:1", ["t"], 0.5),
                ("a.js:1:1", "a.js:2:1", ["u"], 0.5),
            ],
            tool_ids={"t", "u"},
        )
        violations = [v for v in validate_graph(g) if "duplicate" in v]
        assert len(violations) == 1

    def test_found_by_outside_tool_ids(self):
        g = make_graph(
            ["a.js:1:1", "a.js:2:1"],
            [("a.js:1:1", "a.js:2:1", ["mystery"], 0.5)],
            tool_ids={"static-ast"},
        )
        assert any("mystery" in v for v in validate_graph(g))


class TestSourcePosition:
    def test_parse_and_str_round_trip(self):
        p = pos("lib/ast-utils.js:169:25")
        assert (p.file, p.line, p.column) == ("lib/ast-utils.js", 169, 25)
        assert str(p) == "lib/ast-utils.js:169:25"

    def test_bad_position_strings(self):
        with pytest.raises(GraphValidationError):
            pos("no-colons")
        with pytest.raises(GraphValidationError):
            pos("a.js:x:1")
