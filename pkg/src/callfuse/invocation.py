"""Hybrid invocation counts (HNII/HNOI) under a confidence threshold.

An edge whose confidence passes the threshold contributes +1 to its source
node's HNOI (outgoing) and +1 to its target node's HNII (incoming). The
default comparator is strict (edges strictly above the threshold count);
an inclusive comparator is available because the surrounding literature is
ambiguous about edges exactly at the threshold, and the two differ at 0.
"""

from __future__ import annotations

import json
import statistics
from dataclasses import dataclass

from callfuse.graph import HybridCallGraph, SourcePosition

DEFAULT_THRESHOLDS = (0.00, 0.05, 0.20, 0.30)


@dataclass(frozen=True)
class InvocationCounts:
    id: SourcePosition
    hnii: int
    hnoi: int


@dataclass(frozen=True)
class ThresholdConfig:
    threshold: float
    comparator: str = "strict"  # strict (>) | inclusive (>=)

    def __post_init__(self) -> None:
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError(f"threshold {self.threshold} outside [0, 1]")
        if self.comparator not in ("strict", "inclusive"):
            raise ValueError(f"unknown comparator {self.comparator!r}")

    def passes(self, confidence: float) -> bool:
        if self.comparator == "strict":
            return confidence > self.threshold
        return confidence >= self.threshold


def count_invocations(g: HybridCallGraph, t: ThresholdConfig) -> list[InvocationCounts]:
    """HNII/HNOI per node; every node appears, zeros included.

    Emitting zero rows matters: the dataset join downstream needs a value for
    every function, not just the connected ones.
    """
    hnii: dict[SourcePosition, int] = {n.id: 0 for n in g.nodes}
    hnoi: dict[SourcePosition, int] = {n.id: 0 for n in g.nodes}
    for edge in g.edges:
        if t.passes(edge.confidence):
            hnoi[edge.source] += 1
            hnii[edge.target] += 1
    return [
        InvocationCounts(id=node_id, hnii=hnii[node_id], hnoi=hnoi[node_id])
        for node_id in sorted(hnii)
    ]


def threshold_sweep(
    g: HybridCallGraph, thresholds: list[float], comparator: str = "strict"
) -> dict[float, list[InvocationCounts]]:
    """count_invocations at each threshold; thresholds must ascend."""
    if list(thresholds) != sorted(thresholds):
        raise ValueError("thresholds must be sorted ascending")
    return {
        t: count_invocations(g, ThresholdConfig(t, comparator)) for t in thresholds
    }


def descriptive_stats(values: list[int]) -> tuple[float, float, float]:
    """(mean, median, population standard deviation) of a count series."""
    if not values:
        raise ValueError("empty value list")
    return (
        statistics.fmean(values),
        statistics.median(values),
        statistics.pstdev(values),
    )


def counts_to_json(counts: list[InvocationCounts], g: HybridCallGraph) -> bytes:
    """Metric document: one record per node with its position, flags, counts."""
    nodes = g.node_by_id()
    records = []
    for c in counts:
        node = nodes.get(c.id)
        records.append(
            {
                "pos": str(c.id),
                "entry": node.entry if node else False,
                "final": node.final if node else False,
                "hnii": c.hnii,
                "hnoi": c.hnoi,
            }
        )
    return (json.dumps(records, indent=2) + "\n").encode("utf-8")


def counts_from_json(data: bytes | str) -> list[InvocationCounts]:
    records = json.loads(data)
    return [
        InvocationCounts(
            id=SourcePosition.parse(r["pos"]), hnii=int(r["hnii"]), hnoi=int(r["hnoi"])
        )
        for r in records
    ]
