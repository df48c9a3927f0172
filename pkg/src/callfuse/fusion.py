"""Merging per-tool call-graphs and assigning per-edge confidence.

The merged graph contains every node and edge that any tool found; each
edge remembers the exact set of tools that reported it (its Venn cell).
Confidence comes from the true-positive rate of that cell, learned on a
manually labeled edge sample: if ten labeled edges were found by exactly
tools A and B and five were valid, every {A,B} edge gets confidence 0.5.
Cells never seen in the sample fall back to the sample's overall rate.
"""

from __future__ import annotations

import csv
import io
import json
import random
from dataclasses import dataclass, field

from callfuse.graph import (
    CallEdge,
    FunctionNode,
    HybridCallGraph,
    SourcePosition,
)

TOOLS_SEPARATOR = "+"


class FusionError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class VennCell:
    """The exact set of tools that found an edge."""

    tools: tuple[str, ...]  # sorted, non-empty

    @classmethod
    def of(cls, *tools: str) -> "VennCell":
        if not tools:
            raise FusionError("a Venn cell needs at least one tool")
        return cls(tuple(sorted(set(tools))))

    @classmethod
    def from_set(cls, tools) -> "VennCell":
        return cls.of(*tools)

    def __str__(self) -> str:
        return TOOLS_SEPARATOR.join(self.tools)


@dataclass(frozen=True)
class SampleEntry:
    source: SourcePosition
    target: SourcePosition
    cell: VennCell
    valid: bool | None  # None = not yet labeled by a human


@dataclass
class LabeledEdgeSample:
    entries: list[SampleEntry] = field(default_factory=list)

    def __post_init__(self) -> None:
        keys = [(e.source, e.target) for e in self.entries]
        if len(keys) != len(set(keys)):
            raise FusionError("labeled sample contains duplicate edge keys")


@dataclass(frozen=True)
class CellRate:
    tp: int
    total: int

    @property
    def rate(self) -> float:
        return self.tp / self.total if self.total else 0.0


@dataclass(frozen=True)
class ConfidenceTable:
    rates: dict  # VennCell -> CellRate
    fallback: CellRate

    @property
    def fallback_rate(self) -> float:
        return self.fallback.rate

    def rate_for(self, cell: VennCell) -> float:
        entry = self.rates.get(cell)
        return entry.rate if entry is not None else self.fallback.rate


def merge_graphs(graphs: list[tuple[str, HybridCallGraph]]) -> HybridCallGraph:
    """Union per-tool graphs into one; edge provenance is the tool union.

    Confidence is left at 0 here; assign_confidence sets it afterwards.
    """
    seen_tools: set[str] = set()
    for tool_id, _ in graphs:
        if tool_id in seen_tools:
            raise FusionError(f"duplicate tool_id {tool_id!r} in merge input")
        seen_tools.add(tool_id)

    nodes: dict[SourcePosition, FunctionNode] = {}
    found: dict[tuple[SourcePosition, SourcePosition], set[str]] = {}
    all_tools: set[str] = set()
    for tool_id, graph in graphs:
        all_tools.add(tool_id)
        for node in graph.nodes:
            existing = nodes.get(node.id)
            if existing is None:
                nodes[node.id] = node
            else:
                nodes[node.id] = FunctionNode(
                    id=node.id,
                    entry=existing.entry or node.entry,
                    final=existing.final or node.final,
                    name=existing.name if existing.name is not None else node.name,
                )
        for edge in graph.edges:
            provenance = edge.found_by if edge.found_by else frozenset({tool_id})
            found.setdefault(edge.key(), set()).update(provenance)
            all_tools.update(provenance)

    edges = [
        CallEdge(src, dst, frozenset(tools), 0.0)
        for (src, dst), tools in sorted(found.items())
    ]
    return HybridCallGraph.build(
        sorted(nodes.values(), key=lambda n: n.id), edges, all_tools
    )


def estimate_confidence(sample: LabeledEdgeSample) -> ConfidenceTable:
    """Per-cell true-positive rates from a labeled sample; fallback = overall rate."""
    if not sample.entries:
        raise FusionError("labeled sample is empty")
    per_cell: dict[VennCell, list[bool]] = {}
    for entry in sample.entries:
        if entry.valid is None:
            raise FusionError(
                f"sample entry {entry.source} -> {entry.target} is unlabeled"
            )
        per_cell.setdefault(entry.cell, []).append(entry.valid)
    rates = {
        cell: CellRate(tp=sum(labels), total=len(labels))
        for cell, labels in per_cell.items()
    }
    overall = CellRate(
        tp=sum(e.valid for e in sample.entries), total=len(sample.entries)
    )
    return ConfidenceTable(rates=rates, fallback=overall)


def assign_confidence(g: HybridCallGraph, table: ConfidenceTable) -> HybridCallGraph:
    """Set every edge's confidence from its Venn cell's learned rate."""
    edges = [
        CallEdge(
            e.source,
            e.target,
            e.found_by,
            table.rate_for(VennCell.from_set(e.found_by)),
        )
        for e in g.edges
    ]
    return HybridCallGraph.build(g.nodes, edges, g.tool_ids)


def cell_populations(g: HybridCallGraph) -> dict[VennCell, int]:
    populations: dict[VennCell, int] = {}
    for edge in g.edges:
        cell = VennCell.from_set(edge.found_by)
        populations[cell] = populations.get(cell, 0) + 1
    return populations


def stratified_sample(
    g: HybridCallGraph, quota: dict[VennCell, int], seed: int
) -> LabeledEdgeSample:
    """Draw an unlabeled sample of edges per Venn cell, for human labeling.

    Deterministic for a fixed seed. A quota above a cell's population is an
    error naming the cell.
    """
    by_cell: dict[VennCell, list[CallEdge]] = {}
    for edge in sorted(g.edges, key=lambda e: (e.source, e.target)):
        by_cell.setdefault(VennCell.from_set(edge.found_by), []).append(edge)

    rng = random.Random(seed)
    entries: list[SampleEntry] = []
    for cell in sorted(quota):
        want = quota[cell]
        population = by_cell.get(cell, [])
        if want > len(population):
            raise FusionError(
                f"quota {want} exceeds population {len(population)} for cell {cell}"
            )
        for edge in sorted(rng.sample(population, want), key=lambda e: (e.source, e.target)):
            entries.append(SampleEntry(edge.source, edge.target, cell, None))
    return LabeledEdgeSample(entries)


def proportional_quota(populations: dict[VennCell, int], total: int) -> dict[VennCell, int]:
    """Split a total sampling budget across cells, proportional to population.

    Largest-remainder allocation: floors first, leftovers to the biggest
    remainders (ties broken toward larger cells, then by cell name) so that
    cells with more edges get more labeled samples.
    """
    grand = sum(populations.values())
    if grand == 0 or total == 0:
        return {cell: 0 for cell in populations}
    if total > grand:
        raise FusionError(f"total quota {total} exceeds edge population {grand}")
    shares = {cell: total * pop / grand for cell, pop in populations.items()}
    quota = {cell: int(share) for cell, share in shares.items()}
    leftover = total - sum(quota.values())
    order = sorted(
        populations,
        key=lambda c: (-(shares[c] - quota[c]), -populations[c], c),
    )
    for cell in order[:leftover]:
        quota[cell] += 1
    return quota


# -- document I/O --


def confidence_table_to_json(table: ConfidenceTable) -> bytes:
    doc = {
        "cells": [
            {"tools": list(cell.tools), "tp": rate.tp, "total": rate.total}
            for cell, rate in sorted(table.rates.items())
        ],
        "fallback": {"tp": table.fallback.tp, "total": table.fallback.total},
    }
    return (json.dumps(doc, indent=2) + "\n").encode("utf-8")


def confidence_table_from_json(data: bytes | str) -> ConfidenceTable:
    doc = json.loads(data)
    rates = {
        VennCell.of(*cell["tools"]): CellRate(tp=int(cell["tp"]), total=int(cell["total"]))
        for cell in doc["cells"]
    }
    fb = doc["fallback"]
    return ConfidenceTable(rates=rates, fallback=CellRate(int(fb["tp"]), int(fb["total"])))


def sample_to_csv(sample: LabeledEdgeSample) -> bytes:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["source", "target", "tools", "valid"])
    for entry in sample.entries:
        valid = "" if entry.valid is None else str(int(entry.valid))
        writer.writerow([str(entry.source), str(entry.target), str(entry.cell), valid])
    return out.getvalue().encode("utf-8")


def sample_from_csv(data: bytes | str) -> LabeledEdgeSample:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    entries = []
    for row in csv.DictReader(io.StringIO(data)):
        valid_text = (row.get("valid") or "").strip()
        valid = None if valid_text == "" else valid_text in ("1", "true", "True")
        entries.append(
            SampleEntry(
                source=SourcePosition.parse(row["source"]),
                target=SourcePosition.parse(row["target"]),
                cell=VennCell.of(*row["tools"].split(TOOLS_SEPARATOR)),
                valid=valid,
            )
        )
    return LabeledEdgeSample(entries)
