"""Assembling the labeled bug-prediction dataset.

Buggy rows come from each bug's own before-fix analysis: a function is
buggy when a changed line range of the fixing patch overlaps its line span
(closed intervals, columns ignored). Non-buggy rows are every function of
the reference version (the latest buggy snapshot) whose (file, name) never
appears among the buggy matches; positions drift between revisions, so the
cross-version identity is (file, name), not the position triple.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass

import numpy as np

from callfuse.graph import SourcePosition
from callfuse.ingest import Patch, StaticMetricsRow
from callfuse.invocation import InvocationCounts

logger = logging.getLogger(__name__)

STATIC_COLUMNS = ("LOC", "LLOC", "NOS", "McCC", "NL", "CD", "CLOC", "DLOC", "NII", "NOI")
HYBRID_COLUMNS = ("HNII", "HNOI")

VARIANTS = ("s", "h", "s+h")

LABEL_BUGGY = "buggy"
LABEL_NON_BUGGY = "non-buggy"


@dataclass(frozen=True)
class FunctionSpan:
    id: SourcePosition
    end_line: int

    def __post_init__(self) -> None:
        if self.end_line < self.id.line:
            raise ValueError(f"span end {self.end_line} before start {self.id.line}")


@dataclass(frozen=True)
class FunctionRecord:
    id: SourcePosition
    name: str
    LOC: int
    LLOC: int
    NOS: int
    McCC: int
    NL: int
    CD: float
    CLOC: int
    DLOC: int
    NII: int
    NOI: int
    HNII: int
    HNOI: int
    label: str  # buggy | non-buggy


@dataclass(frozen=True)
class BugTables:
    """One bug's before-fix analysis: matched ids plus that revision's tables."""

    bug_id: str
    matched: frozenset[SourcePosition]
    metrics: tuple[StaticMetricsRow, ...]
    counts: tuple[InvocationCounts, ...]


def normalize_variant(kind: str) -> str:
    v = kind.strip().lower()
    if v not in VARIANTS:
        raise ValueError(f"unknown feature-set variant {kind!r}; expected one of {VARIANTS}")
    return v


def feature_columns(variant: str) -> tuple[str, ...]:
    v = normalize_variant(variant)
    if v == "s":
        return STATIC_COLUMNS
    if v == "h":
        return tuple(c for c in STATIC_COLUMNS if c not in ("NII", "NOI")) + HYBRID_COLUMNS
    return STATIC_COLUMNS + HYBRID_COLUMNS


def map_patch_to_functions(
    p: Patch, spans: list[FunctionSpan], rows: list[StaticMetricsRow]
) -> set[SourcePosition]:
    """Ids of functions whose line span intersects a changed range of p.

    Overlap is closed-interval on lines in the same file. Only ids present in
    the metrics table are returned; patch files with no known spans are
    skipped with a warning.
    """
    spans_by_file: dict[str, list[FunctionSpan]] = {}
    for span in spans:
        spans_by_file.setdefault(span.id.file, []).append(span)
    row_ids = {row.id for row in rows}

    matched: set[SourcePosition] = set()
    for change in p.file_changes:
        file_spans = spans_by_file.get(change.path)
        if file_spans is None:
            logger.warning("bug %s: patch file %s has no known spans; skipped", p.bug_id, change.path)
            continue
        for span in file_spans:
            if span.id not in row_ids:
                continue
            for start, end in change.ranges:
                if start <= span.end_line and span.id.line <= end:
                    matched.add(span.id)
                    break
    return matched


def compose_dataset(
    per_bug: list[BugTables],
    reference: tuple[list[StaticMetricsRow], list[InvocationCounts]],
) -> list[FunctionRecord]:
    """Combine per-bug matches and the reference version into labeled records.

    Dedup keeps the first bug's snapshot of a repeatedly-buggy function. A
    matched id missing from its bug's metric table is dropped with a
    diagnostic. HNII/HNOI join by position; a function absent from the call
    graph has no edges, so its counts default to zero.
    """
    records: list[FunctionRecord] = []
    taken: set[SourcePosition] = set()
    buggy_names: set[tuple[str, str]] = set()

    for bug in per_bug:
        metrics_by_id = {row.id: row for row in bug.metrics}
        counts_by_id = {c.id: c for c in bug.counts}
        for func_id in sorted(bug.matched):
            if func_id in taken:
                continue
            row = metrics_by_id.get(func_id)
            if row is None:
                logger.warning(
                    "bug %s: matched function %s missing from metric table; dropped",
                    bug.bug_id,
                    func_id,
                )
                continue
            taken.add(func_id)
            buggy_names.add((row.id.file, row.name))
            records.append(_record_from(row, counts_by_id.get(func_id), LABEL_BUGGY))

    ref_rows, ref_counts = reference
    ref_counts_by_id = {c.id: c for c in ref_counts}
    for row in ref_rows:
        if (row.id.file, row.name) in buggy_names:
            continue
        records.append(_record_from(row, ref_counts_by_id.get(row.id), LABEL_NON_BUGGY))
    return records


def _record_from(
    row: StaticMetricsRow, counts: InvocationCounts | None, label: str
) -> FunctionRecord:
    return FunctionRecord(
        id=row.id,
        name=row.name,
        LOC=row.LOC,
        LLOC=row.LLOC,
        NOS=row.NOS,
        McCC=row.McCC,
        NL=row.NL,
        CD=row.CD,
        CLOC=row.CLOC,
        DLOC=row.DLOC,
        NII=row.NII,
        NOI=row.NOI,
        HNII=counts.hnii if counts else 0,
        HNOI=counts.hnoi if counts else 0,
        label=label,
    )


def build_feature_matrix(
    records: list[FunctionRecord], variant: str
) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """(matrix, labels, column names) for one feature-set variant.

    Labels are 1 for buggy, 0 for non-buggy; column order is fixed by
    feature_columns so exported files and trained models always agree.
    """
    if not records:
        raise ValueError("no records to build a feature matrix from")
    columns = feature_columns(variant)
    matrix = np.array(
        [[float(getattr(r, c)) for c in columns] for r in records], dtype=np.float64
    )
    labels = np.array([1 if r.label == LABEL_BUGGY else 0 for r in records], dtype=np.int64)
    return matrix, labels, list(columns)


def dataset_filename(threshold: float, variant: str) -> str:
    """File naming: threshold 0.0 and variant s+h give ``0_00_s+h.csv``."""
    rendered = f"{threshold:.2f}".replace(".", "_")
    return f"{rendered}_{normalize_variant(variant)}.csv"


def export_dataset(records: list[FunctionRecord], variant: str) -> bytes:
    """CSV with the variant's feature columns plus a 1/0 ``label`` column."""
    columns = feature_columns(variant)
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(list(columns) + ["label"])
    for r in records:
        row = [_format_number(getattr(r, c)) for c in columns]
        row.append("1" if r.label == LABEL_BUGGY else "0")
        writer.writerow(row)
    return out.getvalue().encode("utf-8")


def import_dataset(data: bytes | str) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """Re-read an exported dataset CSV into (matrix, labels, columns)."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    reader = csv.reader(io.StringIO(data))
    header = next(reader)
    if header[-1] != "label":
        raise ValueError("dataset CSV must end with a 'label' column")
    columns = header[:-1]
    rows, labels = [], []
    for row in reader:
        rows.append([float(v) for v in row[:-1]])
        labels.append(int(row[-1]))
    return (
        np.array(rows, dtype=np.float64),
        np.array(labels, dtype=np.int64),
        columns,
    )


def _format_number(value) -> str:
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


# -- span document I/O --


def spans_to_json(spans: list[tuple[SourcePosition, int]] | list[FunctionSpan]) -> bytes:
    docs = []
    for span in spans:
        if isinstance(span, FunctionSpan):
            docs.append({"pos": str(span.id), "end_line": span.end_line})
        else:
            pos, end_line = span
            docs.append({"pos": str(pos), "end_line": end_line})
    return (json.dumps(docs, indent=2) + "\n").encode("utf-8")


def spans_from_json(data: bytes | str) -> list[FunctionSpan]:
    return [
        FunctionSpan(id=SourcePosition.parse(d["pos"]), end_line=int(d["end_line"]))
        for d in json.loads(data)
    ]
