"""Static call-graph extraction over the parsed JavaScript subset.

Direct calls resolve lexically (innermost scope first, then the file's
module scope, then the merged cross-file name table). Property calls
``x.m(...)`` resolve field-based: an edge to every function assigned to a
property named ``m`` anywhere in the snapshot. ``eval``/``apply``/``bind``
sites and computed dispatch are reported as unresolved instead of guessed.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

from callfuse.graph import (
    CallEdge,
    FunctionNode,
    HybridCallGraph,
    SourcePosition,
    entry_node,
)
from callfuse.jsast import CallSite, Diagnostic, JsSubsetAst, parse_js_subset

logger = logging.getLogger(__name__)

STATIC_TOOL_ID = "static-ast"

EVAL_LIKE_PLAIN = {"eval"}
EVAL_LIKE_PROPS = {"apply", "bind"}


@dataclass(frozen=True)
class UnresolvedCall:
    site: SourcePosition
    callee_text: str
    reason: str  # dynamic-dispatch | eval-like | unknown-name


def extract_call_graph(asts: list[JsSubsetAst]) -> tuple[HybridCallGraph, list[UnresolvedCall]]:
    """Resolve all call sites of one program snapshot into a unified graph.

    Every call site ends up either as at least one edge or as exactly one
    UnresolvedCall. Edges carry confidence 1.0 and found_by={"static-ast"};
    calls made from module top level originate at the synthetic entry node.
    """
    nodes: dict[SourcePosition, FunctionNode] = {}
    for ast in asts:
        for func in ast.functions:
            nodes[func.id] = FunctionNode(id=func.id, name=func.name)

    scope_bindings, module_tables, global_table = _build_name_tables(asts)
    props = _build_property_table(asts, scope_bindings, module_tables, global_table)

    edges: set[tuple[SourcePosition, SourcePosition]] = set()
    unresolved: list[UnresolvedCall] = []
    entry_used = False

    for ast in asts:
        for call in ast.calls:
            if call.caller is None:
                caller_pos = entry_node().id
            else:
                caller_pos = ast.functions[call.caller].id
            targets, miss = _resolve_call(
                ast, call, scope_bindings, module_tables, global_table, props
            )
            if miss is not None:
                unresolved.append(miss)
                continue
            if call.caller is None:
                entry_used = True
            for target in targets:
                edges.add((caller_pos, target))

    if entry_used:
        ep = entry_node()
        nodes.setdefault(ep.id, ep)

    edge_objs = [
        CallEdge(src, dst, frozenset({STATIC_TOOL_ID}), 1.0) for src, dst in sorted(edges)
    ]
    graph = HybridCallGraph.build(
        sorted(nodes.values(), key=lambda n: n.id), edge_objs, {STATIC_TOOL_ID}
    )
    return graph, unresolved


def _resolve_call(
    ast: JsSubsetAst,
    call: CallSite,
    scope_bindings,
    module_tables,
    global_table,
    props,
) -> tuple[list[SourcePosition], UnresolvedCall | None]:
    if call.kind == "iife" and call.func is not None:
        return [ast.functions[call.func].id], None
    if call.kind == "computed":
        return [], UnresolvedCall(call.site, "<computed>", "dynamic-dispatch")
    if call.kind == "plain":
        assert call.callee is not None
        if call.callee in EVAL_LIKE_PLAIN:
            return [], UnresolvedCall(call.site, call.callee, "eval-like")
        targets = _resolve_lexical(
            ast, call.caller, call.callee, scope_bindings, module_tables, global_table
        )
        if targets:
            return targets, None
        return [], UnresolvedCall(call.site, call.callee, "unknown-name")
    # member call
    assert call.callee is not None
    if call.callee in EVAL_LIKE_PROPS:
        return [], UnresolvedCall(call.site, f".{call.callee}", "eval-like")
    targets = sorted(props.get(call.callee, ()))
    if targets:
        return targets, None
    return [], UnresolvedCall(call.site, f".{call.callee}", "unknown-name")


def _build_name_tables(asts):
    # (file, scope index) -> name -> [function positions]; scope None = module
    scope_bindings: dict[tuple[str, int | None], dict[str, list[SourcePosition]]] = {}
    module_tables: dict[str, dict[str, list[SourcePosition]]] = {}
    global_table: dict[str, list[SourcePosition]] = {}
    for ast in asts:
        module_tables.setdefault(ast.file, {})
        for binding in ast.bindings:
            pos = ast.functions[binding.func].id
            table = scope_bindings.setdefault((ast.file, binding.scope), {})
            table.setdefault(binding.name, []).append(pos)
            if binding.scope is None:
                module_tables[ast.file].setdefault(binding.name, []).append(pos)
                global_table.setdefault(binding.name, []).append(pos)
    return scope_bindings, module_tables, global_table


def _resolve_lexical(
    ast: JsSubsetAst,
    scope: int | None,
    name: str,
    scope_bindings,
    module_tables,
    global_table,
) -> list[SourcePosition]:
    current = scope
    while current is not None:
        func = ast.functions[current]
        table = scope_bindings.get((ast.file, current), {})
        if name in table:
            return list(table[name])
        if name in func.declared:
            return []  # shadowed by a non-function declaration or parameter
        current = func.parent
    module = module_tables.get(ast.file, {})
    if name in module:
        return list(module[name])
    if name in ast.module_declared:
        return []  # module-level non-function declaration shadows other files
    return list(global_table.get(name, ()))


def _build_property_table(asts, scope_bindings, module_tables, global_table):
    props: dict[str, set[SourcePosition]] = {}
    for ast in asts:
        for pb in ast.prop_bindings:
            if pb.func is not None:
                props.setdefault(pb.prop, set()).add(ast.functions[pb.func].id)
            elif pb.alias is not None:
                for pos in _resolve_lexical(
                    ast, pb.scope, pb.alias, scope_bindings, module_tables, global_table
                ):
                    props.setdefault(pb.prop, set()).add(pos)
    return props


def function_spans(asts: list[JsSubsetAst]) -> list[tuple[SourcePosition, int]]:
    """(position, end line) for every function; feeds patch-overlap matching."""
    spans = []
    for ast in asts:
        for func in ast.functions:
            spans.append((func.id, max(func.end_line, func.id.line)))
    return sorted(spans)


def extract_directory(
    root: Path,
) -> tuple[HybridCallGraph, list[UnresolvedCall], list[Diagnostic], list[JsSubsetAst]]:
    """Parse every .js file under root (skipping node_modules) and extract.

    Unparsable files are skipped with a diagnostic; they never abort the scan.
    """
    root = Path(root)
    asts: list[JsSubsetAst] = []
    diagnostics: list[Diagnostic] = []
    for path in sorted(root.rglob("*.js")):
        rel = path.relative_to(root).as_posix()
        if "node_modules" in path.parts:
            continue
        try:
            ast = parse_js_subset(path.read_bytes(), rel)
        except ValueError as exc:
            logger.warning("skipping %s: %s", rel, exc)
            diagnostics.append(Diagnostic(rel, 1, 1, f"unparsable file skipped: {exc}"))
            continue
        diagnostics.extend(ast.diagnostics)
        asts.append(ast)
    graph, unresolved = extract_call_graph(asts)
    return graph, unresolved, diagnostics, asts
