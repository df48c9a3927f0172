"""Unified call-graph model and its canonical JSON document form.

Nodes are JavaScript functions identified by their source position
(file, line, column); edges are caller -> callee relations annotated with
the set of analysis tools that reported them and a confidence weight in
[0, 1]. Every producer in the toolchain (static extractor, dynamic tracer,
format adapters) speaks this one document format, so the merge and
confidence stages never see tool-specific shapes.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass

logger = logging.getLogger(__name__)

# File path used for the synthetic program-entry node. Angle brackets keep it
# from colliding with a real repository path.
ENTRY_FILE = "<entry>"

_NODE_FIELDS = {"pos", "entry", "final", "name"}
_EDGE_FIELDS = {"source", "target", "found_by", "confidence"}


class GraphDocumentError(ValueError):
    """Raised when a graph document cannot be parsed at all."""


class GraphValidationError(ValueError):
    """Raised when a parsed document violates a graph invariant."""


@dataclass(frozen=True, order=True)
class SourcePosition:
    """Identity of a function: repository-relative file, 1-based line/column."""

    file: str
    line: int
    column: int

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.column}"

    @classmethod
    def parse(cls, text: str) -> "SourcePosition":
        """Parse a ``file:line:col`` position string."""
        parts = text.rsplit(":", 2)
        if len(parts) != 3:
            raise GraphValidationError(f"bad position {text!r}: expected file:line:col")
        file, line_s, col_s = parts
        try:
            line, column = int(line_s), int(col_s)
        except ValueError:
            raise GraphValidationError(
                f"bad position {text!r}: line/column must be integers"
            ) from None
        return cls(normalize_path(file), line, column)


def normalize_path(path: str) -> str:
    """Canonicalize to repository-relative forward-slash form."""
    path = path.replace("\\", "/")
    while path.startswith("./"):
        path = path[2:]
    return path


@dataclass(frozen=True)
class FunctionNode:
    """One function in the graph. ``entry``/``final`` mark synthetic endpoints."""

    id: SourcePosition
    entry: bool = False
    final: bool = False
    name: str | None = None


@dataclass(frozen=True)
class CallEdge:
    """A caller -> callee relation with tool provenance and confidence."""

    source: SourcePosition
    target: SourcePosition
    found_by: frozenset[str]
    confidence: float = 1.0

    def key(self) -> tuple[SourcePosition, SourcePosition]:
        return (self.source, self.target)


@dataclass(frozen=True)
class HybridCallGraph:
    """An immutable call graph merged from one or more analysis tools."""

    nodes: tuple[FunctionNode, ...]
    edges: tuple[CallEdge, ...]
    tool_ids: frozenset[str] = frozenset()

    @classmethod
    def build(
        cls,
        nodes: "list[FunctionNode] | tuple[FunctionNode, ...]",
        edges: "list[CallEdge] | tuple[CallEdge, ...]",
        tool_ids: "set[str] | frozenset[str] | None" = None,
    ) -> "HybridCallGraph":
        """Construct a graph; tool_ids default to the union of edge provenance."""
        if tool_ids is None:
            tool_ids = frozenset().union(*(e.found_by for e in edges)) if edges else frozenset()
        return cls(tuple(nodes), tuple(edges), frozenset(tool_ids))

    def node_ids(self) -> set[SourcePosition]:
        return {n.id for n in self.nodes}

    def node_by_id(self) -> dict[SourcePosition, FunctionNode]:
        return {n.id: n for n in self.nodes}

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, HybridCallGraph):
            return NotImplemented
        return (
            frozenset(self.nodes) == frozenset(other.nodes)
            and frozenset(self.edges) == frozenset(other.edges)
            and self.tool_ids == other.tool_ids
        )

    def __hash__(self) -> int:
        return hash((frozenset(self.nodes), frozenset(self.edges), self.tool_ids))


def parse_graph_document(doc: bytes | str) -> HybridCallGraph:
    """Parse a unified call-graph JSON document.

    Unknown fields are ignored with a warning. Raises GraphDocumentError for
    malformed JSON (with line/offset) and GraphValidationError when the
    document violates a graph invariant (e.g. an edge endpoint that names no
    node).
    """
    if isinstance(doc, bytes):
        doc = doc.decode("utf-8")
    try:
        data = json.loads(doc)
    except json.JSONDecodeError as exc:
        raise GraphDocumentError(
            f"malformed graph document: {exc.msg} (line {exc.lineno}, offset {exc.colno})"
        ) from None

    if not isinstance(data, dict):
        raise GraphDocumentError("malformed graph document: top level must be an object")
    for key in data.keys() - {"nodes", "edges"}:
        logger.warning("ignoring unknown top-level field %r", key)

    nodes: list[FunctionNode] = []
    seen_ids: set[SourcePosition] = set()
    for i, raw in enumerate(data.get("nodes", [])):
        if not isinstance(raw, dict) or "pos" not in raw:
            raise GraphDocumentError(f"node {i}: expected an object with a 'pos' field")
        for key in raw.keys() - _NODE_FIELDS:
            logger.warning("node %s: ignoring unknown field %r", raw.get("pos"), key)
        pos = SourcePosition.parse(raw["pos"])
        _check_position(pos)
        if pos in seen_ids:
            raise GraphValidationError(f"duplicate node id {pos}")
        seen_ids.add(pos)
        nodes.append(
            FunctionNode(
                id=pos,
                entry=bool(raw.get("entry", False)),
                final=bool(raw.get("final", False)),
                name=raw.get("name"),
            )
        )

    edges: list[CallEdge] = []
    seen_pairs: set[tuple[SourcePosition, SourcePosition]] = set()
    for i, raw in enumerate(data.get("edges", [])):
        if not isinstance(raw, dict):
            raise GraphDocumentError(f"edge {i}: expected an object")
        for key in raw.keys() - _EDGE_FIELDS:
            logger.warning("edge %d: ignoring unknown field %r", i, key)
        try:
            source = SourcePosition.parse(raw["source"])
            target = SourcePosition.parse(raw["target"])
        except KeyError as exc:
            raise GraphDocumentError(f"edge {i}: missing field {exc}") from None
        for endpoint in (source, target):
            if endpoint not in seen_ids:
                raise GraphValidationError(f"edge references unknown node {endpoint}")
        found_by = raw.get("found_by", [])
        if not found_by:
            raise GraphValidationError(f"edge {source} -> {target}: empty found_by")
        confidence = raw.get("confidence", 1.0)
        if not 0.0 <= confidence <= 1.0:
            raise GraphValidationError(
                f"edge {source} -> {target}: confidence {confidence} outside [0, 1]"
            )
        if (source, target) in seen_pairs:
            raise GraphValidationError(f"duplicate edge {source} -> {target}")
        seen_pairs.add((source, target))
        edges.append(CallEdge(source, target, frozenset(found_by), float(confidence)))

    return HybridCallGraph.build(nodes, edges)


def serialize_graph(g: HybridCallGraph) -> bytes:
    """Serialize to the canonical document form.

    Output is deterministic: nodes sorted by (file, line, column), edges by
    (source, target), found_by sorted. Round-trips through
    parse_graph_document.
    """
    node_docs = []
    for node in sorted(g.nodes, key=lambda n: n.id):
        doc: dict = {"pos": str(node.id), "entry": node.entry, "final": node.final}
        if node.name is not None:
            doc["name"] = node.name
        node_docs.append(doc)
    edge_docs = [
        {
            "source": str(e.source),
            "target": str(e.target),
            "found_by": sorted(e.found_by),
            "confidence": e.confidence,
        }
        for e in sorted(g.edges, key=lambda e: (e.source, e.target))
    ]
    text = json.dumps({"nodes": node_docs, "edges": edge_docs}, indent=2)
    return (text + "\n").encode("utf-8")


def validate_graph(g: HybridCallGraph) -> list[str]:
    """Check every graph invariant; returns one message per violation.

    Violations are data, not errors: an empty list means the graph is valid.
    """
    violations: list[str] = []
    seen_ids: set[SourcePosition] = set()
    for node in g.nodes:
        try:
            _check_position(node.id)
        except GraphValidationError as exc:
            violations.append(f"node {node.id}: {exc}")
        if node.id in seen_ids:
            violations.append(f"duplicate node id {node.id}")
        seen_ids.add(node.id)

    seen_pairs: set[tuple[SourcePosition, SourcePosition]] = set()
    for edge in g.edges:
        label = f"edge {edge.source} -> {edge.target}"
        for endpoint in (edge.source, edge.target):
            if endpoint not in seen_ids:
                violations.append(f"{label}: endpoint {endpoint} is not a node")
        if not edge.found_by:
            violations.append(f"{label}: empty found_by")
        if not edge.found_by <= g.tool_ids:
            extra = sorted(edge.found_by - g.tool_ids)
            violations.append(f"{label}: found_by tools {extra} not in graph tool_ids")
        if not 0.0 <= edge.confidence <= 1.0:
            violations.append(f"{label}: confidence {edge.confidence} outside [0, 1]")
        if edge.key() in seen_pairs:
            violations.append(f"{label}: duplicate (source, target) pair")
        seen_pairs.add(edge.key())
    return violations


def entry_node() -> FunctionNode:
    """The synthetic program-entry node shared by all tracing tools."""
    return FunctionNode(id=SourcePosition(ENTRY_FILE, 1, 1), entry=True, name="<toplevel>")


def _check_position(pos: SourcePosition) -> None:
    if not pos.file:
        raise GraphValidationError("empty file path")
    if pos.line < 1 or pos.column < 1:
        raise GraphValidationError(f"line/column must be >= 1, got {pos.line}:{pos.column}")
