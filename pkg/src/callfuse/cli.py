"""callfuse: the pipeline CLI tying all stages together.

Stages are composable subcommands driven by one JSON config; `all` chains
them. Every artifact lands under the output directory with a stable name,
and all randomness flows from the configured seed, so reruns are
byte-identical. Exit codes: 0 success, 1 stage failure (stage named),
2 missing input (path named).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

from callfuse.dataset import (
    BugTables,
    compose_dataset,
    dataset_filename,
    export_dataset,
    import_dataset,
    map_patch_to_functions,
    spans_from_json,
    spans_to_json,
)
from callfuse.extractor import STATIC_TOOL_ID, extract_directory, function_spans
from callfuse.fusion import (
    assign_confidence,
    confidence_table_from_json,
    confidence_table_to_json,
    estimate_confidence,
    merge_graphs,
    sample_from_csv,
)
from callfuse.graph import parse_graph_document, serialize_graph
from callfuse.ingest import ToolOutput, convert_tool_output, load_static_metrics, parse_patch
from callfuse.invocation import (
    counts_from_json,
    counts_to_json,
    descriptive_stats,
    threshold_sweep,
)
from callfuse.ml.grid import enumerate_configs
from callfuse.ml.validate import cross_validate_matrix
from callfuse.stats import ConfusionMatrix, ModelResult, compare_feature_sets, emit_report

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_STAGE_FAILURE = 1
EXIT_MISSING_INPUT = 2


class MissingInputError(Exception):
    def __init__(self, path: Path):
        super().__init__(str(path))
        self.path = path


@dataclass
class PipelineConfig:
    base_dir: Path
    out_dir: Path
    source_dir: str | None = None
    tool_outputs: list[dict] = field(default_factory=list)
    labeled_sample: str | None = None
    confidence_table: str | None = None
    thresholds: list[float] = field(default_factory=lambda: [0.0, 0.05, 0.2, 0.3])
    comparator: str = "strict"
    dataset_threshold: float = 0.0
    metrics_csv: str | None = None
    spans: str | None = None
    bugs: list[dict] = field(default_factory=list)
    variants: list[str] = field(default_factory=lambda: ["s", "h", "s+h"])
    cv_folds: int = 10
    seed: int = 0
    oversample_factor: float = 1.5
    config_filter: list[int] | None = None

    @classmethod
    def load(cls, config_path: Path, overrides: dict) -> "PipelineConfig":
        config_path = Path(config_path)
        if not config_path.is_file():
            raise MissingInputError(config_path)
        raw = json.loads(config_path.read_text())
        base_dir = config_path.parent
        known = {
            "source_dir", "tool_outputs", "labeled_sample", "confidence_table",
            "thresholds", "comparator", "dataset_threshold", "metrics_csv", "spans",
            "bugs", "variants", "cv_folds", "seed", "oversample_factor", "config_filter",
        }
        fields = {k: v for k, v in raw.items() if k in known}
        out_dir = raw.get("out_dir", "out")
        for key, value in overrides.items():
            if value is None:
                continue
            if key == "out_dir":
                out_dir = value
            else:
                fields[key] = value
        cfg = cls(base_dir=base_dir, out_dir=base_dir / out_dir, **fields)
        if Path(out_dir).is_absolute():
            cfg.out_dir = Path(out_dir)
        return cfg

    def resolve(self, rel: str) -> Path:
        path = Path(rel)
        return path if path.is_absolute() else self.base_dir / path

    def input_file(self, rel: str) -> Path:
        path = self.resolve(rel)
        if not path.is_file():
            raise MissingInputError(path)
        return path

    def artifact(self, name: str) -> Path:
        return self.out_dir / name

    def existing_artifact(self, name: str) -> Path:
        path = self.artifact(name)
        if not path.is_file():
            raise MissingInputError(path)
        return path

    def write_artifact(self, name: str, data: bytes) -> Path:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        path = self.artifact(name)
        path.write_bytes(data)
        return path


def _threshold_slug(threshold: float) -> str:
    return f"{threshold:.2f}".replace(".", "_")


# -- stages --


def stage_extract_static(cfg: PipelineConfig) -> None:
    if cfg.source_dir is None:
        raise MissingInputError(cfg.base_dir / "<source_dir unset>")
    src = cfg.resolve(cfg.source_dir)
    if not src.is_dir():
        raise MissingInputError(src)
    graph, unresolved, diagnostics, asts = extract_directory(src)
    cfg.write_artifact(f"{STATIC_TOOL_ID}.graph.json", serialize_graph(graph))
    cfg.write_artifact("spans.json", spans_to_json(function_spans(asts)))
    logger.info(
        "extract-static: %d nodes, %d edges, %d unresolved call sites, %d diagnostics",
        len(graph.nodes), len(graph.edges), len(unresolved), len(diagnostics),
    )


def stage_ingest(cfg: PipelineConfig) -> None:
    for spec in cfg.tool_outputs:
        payload = cfg.input_file(spec["path"]).read_bytes()
        graph = convert_tool_output(
            ToolOutput(tool_id=spec["tool_id"], format=spec["format"], payload=payload)
        )
        cfg.write_artifact(f"{spec['tool_id']}.graph.json", serialize_graph(graph))
        logger.info("ingest %s: %d nodes, %d edges", spec["tool_id"], len(graph.nodes), len(graph.edges))


def stage_fuse(cfg: PipelineConfig) -> None:
    graphs = []
    if cfg.source_dir is not None:
        doc = cfg.existing_artifact(f"{STATIC_TOOL_ID}.graph.json").read_bytes()
        graphs.append((STATIC_TOOL_ID, parse_graph_document(doc)))
    for spec in cfg.tool_outputs:
        doc = cfg.existing_artifact(f"{spec['tool_id']}.graph.json").read_bytes()
        graphs.append((spec["tool_id"], parse_graph_document(doc)))
    if not graphs:
        raise ValueError("fuse: no input graphs configured")
    merged = merge_graphs(graphs)

    if cfg.labeled_sample is not None:
        sample = sample_from_csv(cfg.input_file(cfg.labeled_sample).read_bytes())
        table = estimate_confidence(sample)
    elif cfg.confidence_table is not None:
        table = confidence_table_from_json(cfg.input_file(cfg.confidence_table).read_bytes())
    else:
        raise ValueError("fuse: need labeled_sample or confidence_table in config")

    hybrid = assign_confidence(merged, table)
    cfg.write_artifact("hybrid.graph.json", serialize_graph(hybrid))
    cfg.write_artifact("confidence.json", confidence_table_to_json(table))
    logger.info("fuse: %d nodes, %d edges", len(hybrid.nodes), len(hybrid.edges))


def stage_metrics(cfg: PipelineConfig) -> None:
    hybrid = parse_graph_document(cfg.existing_artifact("hybrid.graph.json").read_bytes())
    sweep = threshold_sweep(hybrid, sorted(cfg.thresholds), cfg.comparator)
    stats_lines = ["threshold,metric,avg,median,stddev"]
    for threshold, counts in sweep.items():
        cfg.write_artifact(
            f"metrics_{_threshold_slug(threshold)}.json", counts_to_json(counts, hybrid)
        )
        if counts:
            for metric, values in (
                ("hnii", [c.hnii for c in counts]),
                ("hnoi", [c.hnoi for c in counts]),
            ):
                avg, median, stddev = descriptive_stats(values)
                stats_lines.append(
                    f"{threshold:.2f},{metric},{avg:.6f},{median:.6f},{stddev:.6f}"
                )
    cfg.write_artifact("metrics_stats.csv", ("\n".join(stats_lines) + "\n").encode())
    logger.info("metrics: %d thresholds over %d nodes", len(sweep), len(hybrid.nodes))


def stage_dataset(cfg: PipelineConfig) -> None:
    if cfg.metrics_csv is None:
        raise ValueError("dataset: metrics_csv not configured")
    rows, rejected = load_static_metrics(cfg.input_file(cfg.metrics_csv).read_bytes())
    for diagnostic in rejected:
        logger.warning("metrics CSV: %s", diagnostic)

    if cfg.spans is not None:
        spans = spans_from_json(cfg.input_file(cfg.spans).read_bytes())
    else:
        spans = spans_from_json(cfg.existing_artifact("spans.json").read_bytes())

    counts_doc = cfg.existing_artifact(f"metrics_{_threshold_slug(cfg.dataset_threshold)}.json")
    counts = counts_from_json(counts_doc.read_bytes())

    per_bug = []
    for spec in cfg.bugs:
        patch = parse_patch(cfg.input_file(spec["patch"]).read_bytes(), spec["bug_id"])
        matched = map_patch_to_functions(patch, spans, rows)
        per_bug.append(
            BugTables(
                bug_id=spec["bug_id"],
                matched=frozenset(matched),
                metrics=tuple(rows),
                counts=tuple(counts),
            )
        )
    records = compose_dataset(per_bug, (rows, counts))
    n_buggy = sum(r.label == "buggy" for r in records)
    logger.info("dataset: %d records (%d buggy)", len(records), n_buggy)
    for variant in cfg.variants:
        name = dataset_filename(cfg.dataset_threshold, variant)
        cfg.write_artifact(name, export_dataset(records, variant))


def stage_train(cfg: PipelineConfig) -> None:
    configs = enumerate_configs()
    if cfg.config_filter:
        wanted = set(cfg.config_filter)
        configs = [c for c in configs if c.config_id in wanted]
    results = []
    for variant in cfg.variants:
        name = dataset_filename(cfg.dataset_threshold, variant)
        matrix, labels, _ = import_dataset(cfg.existing_artifact(name).read_bytes())
        for config in configs:
            folds = cross_validate_matrix(
                config, matrix, labels,
                k=cfg.cv_folds, seed=cfg.seed, oversample_factor=cfg.oversample_factor,
            )
            for score in folds:
                m = score.matrix
                results.append(
                    {
                        "config_id": config.config_id,
                        "algorithm": config.algorithm,
                        "variant": variant,
                        "fold": score.fold,
                        "tp": m.tp, "fp": m.fp, "tn": m.tn, "fn": m.fn,
                    }
                )
    doc = {"seed": cfg.seed, "k": cfg.cv_folds, "results": results}
    cfg.write_artifact("results.json", (json.dumps(doc, indent=2) + "\n").encode())
    logger.info("train: %d fold results", len(results))


def stage_report(cfg: PipelineConfig) -> None:
    doc = json.loads(cfg.existing_artifact("results.json").read_bytes())
    aggregated: dict[tuple[int, str], dict] = {}
    for r in doc["results"]:
        key = (r["config_id"], r["variant"])
        entry = aggregated.setdefault(
            key, {"algorithm": r["algorithm"], "matrix": ConfusionMatrix(0, 0, 0, 0)}
        )
        entry["matrix"] = entry["matrix"] + ConfusionMatrix(r["tp"], r["fp"], r["tn"], r["fn"])

    results = [
        ModelResult.from_matrix(config_id, entry["algorithm"], variant, entry["matrix"])
        for (config_id, variant), entry in sorted(aggregated.items())
    ]
    by_variant: dict[str, list[ModelResult]] = {}
    for r in results:
        by_variant.setdefault(r.variant, []).append(r)
    tests = compare_feature_sets(by_variant, "f_measure") if len(by_variant) > 1 else None

    for name, data in emit_report(results, tests).items():
        cfg.write_artifact(name, data)
    logger.info("report: %d model results, %d significance tests", len(results), len(tests or {}))


STAGES = {
    "extract-static": stage_extract_static,
    "ingest": stage_ingest,
    "fuse": stage_fuse,
    "metrics": stage_metrics,
    "dataset": stage_dataset,
    "train": stage_train,
    "report": stage_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="callfuse",
        description="Hybrid call-graph fusion and bug-prediction pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in list(STAGES) + ["all"]:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="pipeline config JSON")
        p.add_argument("--out", help="output directory (overrides config)")
        p.add_argument("--seed", type=int, help="seed override")
        p.add_argument(
            "--threshold", type=float, action="append",
            help="threshold override, repeatable",
        )
        if name == "extract-static":
            p.add_argument("source_dir", nargs="?", help="JavaScript root (overrides config)")
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    overrides = {
        "out_dir": args.out,
        "seed": args.seed,
        "thresholds": args.threshold,
    }
    if getattr(args, "source_dir", None):
        overrides["source_dir"] = args.source_dir

    stage_names = list(STAGES) if args.command == "all" else [args.command]
    try:
        cfg = PipelineConfig.load(Path(args.config), overrides)
    except MissingInputError as exc:
        print(f"missing input: {exc.path}", file=sys.stderr)
        return EXIT_MISSING_INPUT

    for name in stage_names:
        try:
            STAGES[name](cfg)
        except MissingInputError as exc:
            print(f"missing input: {exc.path}", file=sys.stderr)
            return EXIT_MISSING_INPUT
        except Exception as exc:
            print(f"stage {name} failed: {exc}", file=sys.stderr)
            return EXIT_STAGE_FAILURE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
