import random

import pytest

from callfuse.fusion import (
    CellRate,
    ConfidenceTable,
    FusionError,
    LabeledEdgeSample,
    SampleEntry,
    VennCell,
    assign_confidence,
    cell_populations,
    confidence_table_from_json,
    confidence_table_to_json,
    estimate_confidence,
    merge_graphs,
    proportional_quota,
    sample_from_csv,
    sample_to_csv,
    stratified_sample,
)
from callfuse.graph import CallEdge, FunctionNode, HybridCallGraph, SourcePosition


def pos(i):
    return SourcePosition("f.js", i, 1)


def graph_for(tool, pairs):
    nodes = {}
    edges = []
    for a, b in pairs:
        nodes.setdefault(a, FunctionNode(id=pos(a)))
        nodes.setdefault(b, FunctionNode(id=pos(b)))
        edges.append(CallEdge(pos(a), pos(b), frozenset({tool}), 1.0))
    return HybridCallGraph.build(list(nodes.values()), edges, {tool})


# 3-tool fixture with partial overlaps; per-cell counts enumerated by hand:
#   {A}: (1,2) (1,3)          -> 2 edges
#   {B}: (4,5)                -> 1 edge
#   {C}: (6,7) (6,8) (6,9)    -> 3 edges
#   {A,B}: (2,3) (2,4)        -> 2 edges
#   {A,C}: (3,4)              -> 1 edge
#   {A,B,C}: (5,6)            -> 1 edge
THREE_TOOL_INPUT = [
    ("A", [(1, 2), (1, 3), (2, 3), (2, 4), (3, 4), (5, 6)]),
    ("B", [(4, 5), (2, 3), (2, 4), (5, 6)]),
    ("C", [(6, 7), (6, 8), (6, 9), (3, 4), (5, 6)]),
]
THREE_TOOL_CELLS = {
    VennCell.of("A"): 2,
    VennCell.of("B"): 1,
    VennCell.of("C"): 3,
    VennCell.of("A", "B"): 2,
    VennCell.of("A", "C"): 1,
    VennCell.of("A", "B", "C"): 1,
}


class TestMerge:
    def test_same_edge_from_two_tools(self):
        merged = merge_graphs([("A", graph_for("A", [(1, 2)])), ("B", graph_for("B", [(1, 2)]))])
        assert len(merged.edges) == 1
        assert merged.edges[0].found_by == frozenset({"A", "B"})
        assert merged.edges[0].confidence == 0.0

    def test_disjoint_graphs_sum(self):
        merged = merge_graphs([("A", graph_for("A", [(1, 2)])), ("B", graph_for("B", [(3, 4)]))])
        assert len(merged.edges) == 2
        assert len(merged.nodes) == 4

    def test_three_tool_cells_match_hand_enumeration(self):
        merged = merge_graphs([(t, graph_for(t, pairs)) for t, pairs in THREE_TOOL_INPUT])
        assert cell_populations(merged) == THREE_TOOL_CELLS
        assert len(merged.edges) == 10

    def test_merge_is_tool_order_independent(self):
        inputs = [(t, graph_for(t, pairs)) for t, pairs in THREE_TOOL_INPUT]
        merged_fwd = merge_graphs(inputs)
        merged_rev = merge_graphs(list(reversed(inputs)))
        assert merged_fwd == merged_rev

    def test_merge_associativity_via_pre_merge(self):
        inputs = [(t, graph_for(t, pairs)) for t, pairs in THREE_TOOL_INPUT]
        ab = merge_graphs(inputs[:2])
        merged_nested = merge_graphs([("AB", ab), inputs[2]])
        merged_flat = merge_graphs(inputs)
        # edge provenance survives nesting: the pre-merged graph's found_by
        # sets are reused, not overwritten by the wrapping tool id
        flat_cells = cell_populations(merged_flat)
        nested_cells = cell_populations(merged_nested)
        assert nested_cells == flat_cells

    def test_duplicate_tool_id_rejected(self):
        g = graph_for("A", [(1, 2)])
        with pytest.raises(FusionError, match="duplicate tool_id"):
            merge_graphs([("A", g), ("A", g)])


class TestEstimateConfidence:
    def sample(self, spec):
        # spec: list of (cell tools, valid) per entry
        entries = []
        for i, (tools, valid) in enumerate(spec):
            entries.append(SampleEntry(pos(i + 1), pos(100 + i), VennCell.of(*tools), valid))
        return LabeledEdgeSample(entries)

    def test_half_valid_gives_half_confidence(self):
        sample = self.sample([(("A", "B"), i < 5) for i in range(10)])
        table = estimate_confidence(sample)
        assert table.rates[VennCell.of("A", "B")] == CellRate(tp=5, total=10)
        assert table.rate_for(VennCell.of("A", "B")) == 0.5

    def test_all_valid_gives_one(self):
        table = estimate_confidence(self.sample([(("A",), True)] * 3))
        assert table.rate_for(VennCell.of("A")) == 1.0

    def test_unseen_cell_falls_back_to_overall_rate(self):
        spec = [(("A",), True), (("A",), True), (("A",), False), (("B",), True), (("B",), True), (("B",), False)]
        table = estimate_confidence(self.sample(spec))
        assert table.fallback == CellRate(tp=4, total=6)
        assert table.rate_for(VennCell.of("C")) == 4 / 6

    def test_exact_ratios_on_random_samples(self):
        rng = random.Random(7)
        for _ in range(25):
            spec = [
                (rng.choice([("A",), ("B",), ("A", "B")]), rng.random() < 0.6)
                for _ in range(rng.randint(1, 40))
            ]
            table = estimate_confidence(self.sample(spec))
            for cell, rate in table.rates.items():
                expected_tp = sum(1 for tools, valid in spec if VennCell.of(*tools) == cell and valid)
                expected_total = sum(1 for tools, _ in spec if VennCell.of(*tools) == cell)
                assert (rate.tp, rate.total) == (expected_tp, expected_total)
                assert rate.rate == rate.tp / rate.total

    def test_empty_sample_rejected(self):
        with pytest.raises(FusionError):
            estimate_confidence(LabeledEdgeSample([]))

    def test_unlabeled_entry_rejected(self):
        with pytest.raises(FusionError, match="unlabeled"):
            estimate_confidence(self.sample([(("A",), None)]))


class TestAssignConfidence:
    def table(self):
        return ConfidenceTable(
            rates={VennCell.of("A", "B"): CellRate(5, 10), VennCell.of("A"): CellRate(3, 4)},
            fallback=CellRate(2, 3),
        )

    def test_cell_rate_applied(self):
        merged = merge_graphs([("A", graph_for("A", [(1, 2)])), ("B", graph_for("B", [(1, 2)]))])
        out = assign_confidence(merged, self.table())
        assert out.edges[0].confidence == 0.5

    def test_all_cells_rate_one(self):
        table = ConfidenceTable(
            rates={VennCell.of("A"): CellRate(4, 4)}, fallback=CellRate(1, 1)
        )
        out = assign_confidence(graph_for("A", [(1, 2), (2, 3)]), table)
        assert all(e.confidence == 1.0 for e in out.edges)

    def test_unseen_cell_gets_fallback(self):
        out = assign_confidence(graph_for("Z", [(1, 2)]), self.table())
        assert out.edges[0].confidence == 2 / 3

    def test_idempotent_and_count_preserving(self):
        merged = merge_graphs([(t, graph_for(t, pairs)) for t, pairs in THREE_TOOL_INPUT])
        once = assign_confidence(merged, self.table())
        twice = assign_confidence(once, self.table())
        assert once == twice
        assert len(once.nodes) == len(merged.nodes)
        assert len(once.edges) == len(merged.edges)

    def test_confidences_come_from_table_or_fallback(self):
        merged = merge_graphs([(t, graph_for(t, pairs)) for t, pairs in THREE_TOOL_INPUT])
        table = self.table()
        out = assign_confidence(merged, table)
        allowed = {r.rate for r in table.rates.values()} | {table.fallback_rate}
        assert {e.confidence for e in out.edges} <= allowed


class TestStratifiedSample:
    def merged(self):
        return merge_graphs([(t, graph_for(t, pairs)) for t, pairs in THREE_TOOL_INPUT])

    def test_exact_quota_drawn(self):
        sample = stratified_sample(self.merged(), {VennCell.of("C"): 2}, seed=11)
        assert len(sample.entries) == 2
        assert all(e.cell == VennCell.of("C") for e in sample.entries)
        assert len({(e.source, e.target) for e in sample.entries}) == 2

    def test_same_seed_same_sample(self):
        quota = {VennCell.of("C"): 2, VennCell.of("A"): 1}
        a = stratified_sample(self.merged(), quota, seed=3)
        b = stratified_sample(self.merged(), quota, seed=3)
        assert a.entries == b.entries

    def test_quota_exceeding_population_names_cell(self):
        with pytest.raises(FusionError, match="B"):
            stratified_sample(self.merged(), {VennCell.of("B"): 5}, seed=1)

    def test_entries_are_unlabeled(self):
        sample = stratified_sample(self.merged(), {VennCell.of("A"): 2}, seed=5)
        assert all(e.valid is None for e in sample.entries)


class TestProportionalQuota:
    def test_largest_remainder_allocation(self):
        # populations 6/3/1, budget 5: exact shares 3.0/1.5/0.5, floors 3/1/0,
        # one leftover goes to the larger of the two 0.5 remainders (pop 3).
        populations = {VennCell.of("A"): 6, VennCell.of("B"): 3, VennCell.of("C"): 1}
        quota = proportional_quota(populations, 5)
        assert quota == {VennCell.of("A"): 3, VennCell.of("B"): 2, VennCell.of("C"): 0}
        assert sum(quota.values()) == 5

    def test_total_budget_preserved(self):
        rng = random.Random(2)
        for _ in range(30):
            populations = {
                VennCell.of(name): rng.randint(0, 50) for name in ("A", "B", "C", "D")
            }
            grand = sum(populations.values())
            if grand == 0:
                continue
            total = rng.randint(0, grand)
            quota = proportional_quota(populations, total)
            assert sum(quota.values()) == total
            assert all(quota[c] <= populations[c] for c in populations)

    def test_zero_budget(self):
        populations = {VennCell.of("A"): 4}
        assert proportional_quota(populations, 0) == {VennCell.of("A"): 0}


class TestDocumentIO:
    def test_confidence_table_round_trip(self):
        table = ConfidenceTable(
            rates={VennCell.of("A", "B"): CellRate(5, 10), VennCell.of("C"): CellRate(1, 4)},
            fallback=CellRate(6, 14),
        )
        again = confidence_table_from_json(confidence_table_to_json(table))
        assert again.rates == table.rates
        assert again.fallback == table.fallback

    def test_sample_csv_round_trip(self):
        entries = [
            SampleEntry(pos(1), pos(2), VennCell.of("A", "B"), True),
            SampleEntry(pos(2), pos(3), VennCell.of("A"), False),
            SampleEntry(pos(3), pos(4), VennCell.of("B"), None),
        ]
        sample = LabeledEdgeSample(entries)
        again = sample_from_csv(sample_to_csv(sample))
        assert again.entries == entries
