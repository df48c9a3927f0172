"""Adapters from external artifacts to the toolkit's data model.

Three inputs arrive from outside: call-graph outputs of individual analysis
tools, function-level static-metric CSV exports, and unified-diff patches of
bug-fixing commits. Everything is converted here, at the boundary, so the
rest of the pipeline only sees canonical types.
"""

from __future__ import annotations

import csv
import io
import logging
import re
from dataclasses import dataclass

from callfuse.graph import (
    CallEdge,
    FunctionNode,
    HybridCallGraph,
    SourcePosition,
    normalize_path,
    parse_graph_document,
)

logger = logging.getLogger(__name__)

METRIC_COLUMNS = ("LOC", "LLOC", "NOS", "McCC", "NL", "CD", "CLOC", "DLOC", "NII", "NOI")
REQUIRED_COLUMNS = ("Name", "Path", "Line", "Column") + METRIC_COLUMNS

_PAIRLIST_LINE = re.compile(r"^\s*(?P<src>\S+)\s*->\s*(?P<dst>\S+)\s*$")
_HUNK_HEADER = re.compile(
    r"^@@ -(?P<old_start>\d+)(?:,(?P<old_len>\d+))? \+(?P<new_start>\d+)(?:,(?P<new_len>\d+))? @@"
)


class UnknownFormatError(ValueError):
    pass


class PayloadError(ValueError):
    pass


class MissingColumnError(ValueError):
    pass


class PatchFormatError(ValueError):
    pass


@dataclass(frozen=True)
class ToolOutput:
    """Raw output of one call-graph tool, prior to conversion."""

    tool_id: str
    format: str  # "unified" | "pairlist"
    payload: bytes


@dataclass(frozen=True)
class StaticMetricsRow:
    """Function-level static metrics as exported by the external analyzer."""

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


@dataclass(frozen=True)
class FileChange:
    path: str
    ranges: tuple[tuple[int, int], ...]  # inclusive 1-based pre-image line ranges


@dataclass(frozen=True)
class Patch:
    """Line ranges touched by one bug-fixing commit, in pre-fix coordinates."""

    bug_id: str
    file_changes: tuple[FileChange, ...]


def convert_tool_output(t: ToolOutput) -> HybridCallGraph:
    """Convert one tool's output to a unified graph.

    All edges get found_by={tool_id} and confidence 1.0; the real confidence
    is assigned later by the fusion stage.
    """
    if not t.tool_id:
        raise ValueError("tool_id must be non-empty")
    if t.format == "unified":
        base = parse_graph_document(t.payload)
        edges = [
            CallEdge(e.source, e.target, frozenset({t.tool_id}), 1.0) for e in base.edges
        ]
        return HybridCallGraph.build(base.nodes, edges, {t.tool_id})
    if t.format == "pairlist":
        return _parse_pairlist(t.payload, t.tool_id)
    raise UnknownFormatError(f"unknown tool-output format {t.format!r}")


def _parse_pairlist(payload: bytes, tool_id: str) -> HybridCallGraph:
    nodes: dict[SourcePosition, FunctionNode] = {}
    edges: dict[tuple[SourcePosition, SourcePosition], CallEdge] = {}
    for lineno, line in enumerate(payload.decode("utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        m = _PAIRLIST_LINE.match(line)
        if m is None:
            raise PayloadError(f"pairlist line {lineno}: expected 'src -> dst', got {line!r}")
        src = SourcePosition.parse(m.group("src"))
        dst = SourcePosition.parse(m.group("dst"))
        for p in (src, dst):
            nodes.setdefault(p, FunctionNode(id=p))
        edges.setdefault((src, dst), CallEdge(src, dst, frozenset({tool_id}), 1.0))
    return HybridCallGraph.build(list(nodes.values()), list(edges.values()), {tool_id})


def load_static_metrics(data: bytes | str) -> tuple[list[StaticMetricsRow], list[str]]:
    """Load a function-level metrics CSV.

    Returns (accepted rows, per-row rejection diagnostics). A missing
    mandatory column is a hard error; a bad cell only rejects its own row.
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8-sig")
    reader = csv.DictReader(io.StringIO(data))
    header = reader.fieldnames or []
    for col in REQUIRED_COLUMNS:
        if col not in header:
            raise MissingColumnError(f"missing column {col}")

    rows: list[StaticMetricsRow] = []
    rejected: list[str] = []
    for i, raw in enumerate(reader, start=2):  # line 1 is the header
        try:
            rows.append(_parse_metrics_row(raw))
        except ValueError as exc:
            rejected.append(f"line {i}: {exc}")
    return rows, rejected


def _parse_metrics_row(raw: dict[str, str]) -> StaticMetricsRow:
    def cell(col: str) -> str:
        value = raw.get(col)
        if value is None or value.strip() == "":
            raise ValueError(f"missing cell {col}")
        return value.strip()

    def count(col: str) -> int:
        value = float(cell(col))
        if value != int(value):
            raise ValueError(f"{col} must be an integer count, got {value}")
        if value < 0:
            raise ValueError(f"{col} must be >= 0, got {value}")
        return int(value)

    cd = float(cell("CD"))
    if not 0.0 <= cd <= 1.0:
        raise ValueError(f"CD out of range: {cd}")
    pos = SourcePosition(normalize_path(cell("Path")), count("Line"), count("Column"))
    if pos.line < 1 or pos.column < 1:
        raise ValueError(f"position {pos} must have line/column >= 1")
    return StaticMetricsRow(
        id=pos,
        name=cell("Name"),
        LOC=count("LOC"),
        LLOC=count("LLOC"),
        NOS=count("NOS"),
        McCC=count("McCC"),
        NL=count("NL"),
        CD=cd,
        CLOC=count("CLOC"),
        DLOC=count("DLOC"),
        NII=count("NII"),
        NOI=count("NOI"),
    )


def parse_patch(diff: bytes | str, bug_id: str) -> Patch:
    """Extract per-file changed line ranges from a unified diff.

    Ranges are pre-image (before-fix) line numbers: deleted lines map to
    themselves, pure additions anchor to the pre-image line they follow
    (clamped to 1 at file start). Buggy functions are looked up in the
    before-fix revision, so pre-image coordinates are the ones that matter.
    """
    if isinstance(diff, bytes):
        diff = diff.decode("utf-8", errors="replace")

    touched: dict[str, set[int]] = {}
    old_path: str | None = None
    current: str | None = None
    old_ln = 0
    in_hunk = False
    remaining_old = 0
    remaining_new = 0
    saw_header = False

    for line in diff.splitlines():
        if line.startswith("--- "):
            old_path = _strip_diff_path(line[4:])
            in_hunk = False
            saw_header = True
            continue
        if line.startswith("+++ "):
            new_path = _strip_diff_path(line[4:])
            current = old_path if old_path is not None else new_path
            if current is None:  # both sides /dev/null cannot happen in practice
                current = new_path
            in_hunk = False
            saw_header = True
            continue
        m = _HUNK_HEADER.match(line)
        if m:
            if current is None:
                raise PatchFormatError(f"bug {bug_id}: hunk before any file header")
            old_start = int(m.group("old_start"))
            remaining_old = int(m.group("old_len") or "1")
            remaining_new = int(m.group("new_len") or "1")
            old_ln = old_start if remaining_old > 0 else old_start + 1
            in_hunk = True
            continue
        if not in_hunk or (remaining_old <= 0 and remaining_new <= 0):
            continue
        if line.startswith("\\"):  # "\ No newline at end of file"
            continue
        if line.startswith("-"):
            touched.setdefault(current, set()).add(old_ln)
            old_ln += 1
            remaining_old -= 1
        elif line.startswith("+"):
            touched.setdefault(current, set()).add(max(1, old_ln - 1))
            remaining_new -= 1
        else:
            # context line ("" or " ...")
            old_ln += 1
            remaining_old -= 1
            remaining_new -= 1

    if not saw_header:
        raise PatchFormatError(f"bug {bug_id}: input is not a unified diff")

    changes = tuple(
        FileChange(path, _to_ranges(lines)) for path, lines in sorted(touched.items())
    )
    return Patch(bug_id=bug_id, file_changes=changes)


def _strip_diff_path(text: str) -> str | None:
    path = text.split("\t")[0].strip()
    if path == "/dev/null":
        return None
    if path.startswith(("a/", "b/")):
        path = path[2:]
    return normalize_path(path)


def _to_ranges(lines: set[int]) -> tuple[tuple[int, int], ...]:
    """Collapse a set of line numbers into sorted disjoint inclusive ranges."""
    ranges: list[tuple[int, int]] = []
    for n in sorted(lines):
        if ranges and n <= ranges[-1][1] + 1:
            ranges[-1] = (ranges[-1][0], max(ranges[-1][1], n))
        else:
            ranges.append((n, n))
    return tuple(ranges)
