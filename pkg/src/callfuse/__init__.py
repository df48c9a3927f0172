"""callfuse: hybrid call-graph fusion and bug-prediction toolkit."""

from callfuse.graph import (
    CallEdge,
    FunctionNode,
    HybridCallGraph,
    SourcePosition,
    parse_graph_document,
    serialize_graph,
    validate_graph,
)

__all__ = [
    "CallEdge",
    "FunctionNode",
    "HybridCallGraph",
    "SourcePosition",
    "parse_graph_document",
    "serialize_graph",
    "validate_graph",
]

__version__ = "0.1.0"
