"""Confusion-matrix scores, model rankings, and the Wilcoxon signed-rank test.

The Wilcoxon statistic here is T = min(sum of positive ranks, sum of
negative ranks), with zero differences dropped and mid-ranks for tied
absolute differences. The two-sided p-value is exact (subset-sum counting,
equivalent to enumerating all 2^n sign assignments) up to n=20 and a
tie-corrected, continuity-corrected normal approximation above.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from statistics import NormalDist
from typing import NamedTuple

SCORE_NAMES = ("accuracy", "precision", "recall", "f_measure", "mcc")
EXACT_CUTOFF = 20
VARIANT_PAIRS = (("s", "h"), ("s", "s+h"), ("h", "s+h"))

_NORMAL = NormalDist()


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self) -> None:
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ValueError("confusion-matrix counts must be >= 0")

    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(
            self.tp + other.tp, self.fp + other.fp, self.tn + other.tn, self.fn + other.fn
        )

    @classmethod
    def from_predictions(cls, y_true, y_pred) -> "ConfusionMatrix":
        tp = fp = tn = fn = 0
        for truth, pred in zip(y_true, y_pred):
            if truth == 1 and pred == 1:
                tp += 1
            elif truth == 0 and pred == 1:
                fp += 1
            elif truth == 0 and pred == 0:
                tn += 1
            else:
                fn += 1
        return cls(tp, fp, tn, fn)


class Scores(NamedTuple):
    accuracy: float
    precision: float
    recall: float
    f_measure: float
    mcc: float


def f_measure(precision: float, recall: float) -> float:
    """Harmonic mean of precision and recall; 0 when both are 0."""
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def classification_metrics(m: ConfusionMatrix) -> Scores:
    """Accuracy, precision, recall, F-measure, and MCC from one matrix.

    Zero-denominator conventions: precision/recall/F are 0 when their
    denominators are 0, MCC is 0 when any marginal is 0.
    """
    total = m.total()
    if total == 0:
        raise ValueError("empty confusion matrix")
    accuracy = (m.tp + m.tn) / total
    precision = m.tp / (m.tp + m.fp) if m.tp + m.fp else 0.0
    recall = m.tp / (m.tp + m.fn) if m.tp + m.fn else 0.0
    marginals = (m.tp + m.fp, m.tp + m.fn, m.tn + m.fp, m.tn + m.fn)
    if 0 in marginals:
        mcc = 0.0
    else:
        mcc = (m.tp * m.tn - m.fp * m.fn) / math.sqrt(math.prod(marginals))
    return Scores(accuracy, precision, recall, f_measure(precision, recall), mcc)


@dataclass(frozen=True)
class ModelResult:
    config_id: int
    algorithm: str
    variant: str
    matrix: ConfusionMatrix
    accuracy: float
    precision: float
    recall: float
    f_measure: float
    mcc: float

    @classmethod
    def from_matrix(
        cls, config_id: int, algorithm: str, variant: str, matrix: ConfusionMatrix
    ) -> "ModelResult":
        scores = classification_metrics(matrix)
        return cls(config_id, algorithm, variant, matrix, *scores)


def rank_models(results: list[ModelResult], by: str, top_k: int) -> list[ModelResult]:
    """Top_k results by the chosen score, descending.

    Ties break by (f_measure desc, config_id asc); the input list is never
    mutated, so ranking is a permutation of the results.
    """
    if by not in SCORE_NAMES:
        raise ValueError(f"unknown score {by!r}; expected one of {SCORE_NAMES}")
    if not results:
        raise ValueError("no results to rank")
    ordered = sorted(
        results, key=lambda r: (-getattr(r, by), -r.f_measure, r.config_id)
    )
    return ordered[:top_k]


@dataclass(frozen=True)
class StatTestResult:
    T: float
    p_value: float
    n_effective: int
    method: str  # exact | normal-approximation


def _midranks(values: list[float]) -> list[float]:
    n = len(values)
    order = sorted(range(n), key=lambda i: values[i])
    ranks = [0.0] * n
    i = 0
    while i < n:
        j = i
        while j + 1 < n and values[order[j + 1]] == values[order[i]]:
            j += 1
        average = (i + j + 2) / 2.0  # positions i+1 .. j+1, 1-based
        for t in range(i, j + 1):
            ranks[order[t]] = average
        i = j + 1
    return ranks


def _exact_two_sided_p(doubled_ranks: list[int], t2: int) -> float:
    """P(min(W+, W-) <= T) under random signs, by subset-sum counting.

    Counting subsets whose doubled-rank sum falls in [0, T2] or
    [S2-T2, S2] is exactly the 2^n sign enumeration, just polynomial-time.
    """
    n = len(doubled_ranks)
    if n == 0:
        return 1.0
    s2 = sum(doubled_ranks)
    ways = [0] * (s2 + 1)
    ways[0] = 1
    for r in doubled_ranks:
        for s in range(s2, r - 1, -1):
            if ways[s - r]:
                ways[s] += ways[s - r]
    low = sum(ways[: t2 + 1])
    high = sum(ways[s2 - t2 :])
    overlap = 0
    if s2 - t2 <= t2:
        overlap = sum(ways[s2 - t2 : t2 + 1])
    return min(1.0, (low + high - overlap) / 2.0**n)


def wilcoxon_signed_rank(
    x: list[float], y: list[float], zero_method: str = "wilcox"
) -> StatTestResult:
    """Two-sided Wilcoxon signed-rank test on paired samples.

    zero_method "wilcox" drops zero differences before ranking (the default
    and the classical treatment); "pratt" ranks them but drops their ranks
    from both sums.
    """
    if len(x) != len(y):
        raise ValueError("paired samples must have equal length")
    if not x:
        raise ValueError("paired samples must be non-empty")
    if zero_method not in ("wilcox", "pratt"):
        raise ValueError(f"unknown zero_method {zero_method!r}")

    diffs = [float(a) - float(b) for a, b in zip(x, y)]
    if zero_method == "wilcox":
        nonzero = [d for d in diffs if d != 0.0]
        ranks = _midranks([abs(d) for d in nonzero])
        ranked = list(zip(nonzero, ranks))
    else:
        ranks = _midranks([abs(d) for d in diffs])
        ranked = [(d, r) for d, r in zip(diffs, ranks) if d != 0.0]

    n_eff = len(ranked)
    if n_eff == 0:
        return StatTestResult(T=0.0, p_value=1.0, n_effective=0, method="exact")

    w_plus = sum(r for d, r in ranked if d > 0)
    w_minus = sum(r for d, r in ranked if d < 0)
    t_stat = min(w_plus, w_minus)

    if n_eff <= EXACT_CUTOFF:
        doubled = [round(2 * r) for _, r in ranked]
        p = _exact_two_sided_p(doubled, round(2 * t_stat))
        return StatTestResult(t_stat, p, n_eff, "exact")

    mean = n_eff * (n_eff + 1) / 4.0
    variance = n_eff * (n_eff + 1) * (2 * n_eff + 1) / 24.0
    tie_sizes = _tie_group_sizes([r for _, r in ranked])
    variance -= sum(t**3 - t for t in tie_sizes) / 48.0
    if variance <= 0:
        return StatTestResult(t_stat, 1.0, n_eff, "normal-approximation")
    z = (t_stat - mean + 0.5) / math.sqrt(variance)  # continuity correction
    p = min(1.0, max(2.0 * _NORMAL.cdf(z), math.ulp(0.0)))
    return StatTestResult(t_stat, p, n_eff, "normal-approximation")


def _tie_group_sizes(ranks: list[float]) -> list[int]:
    counts: dict[float, int] = {}
    for r in ranks:
        counts[r] = counts.get(r, 0) + 1
    return [c for c in counts.values() if c > 1]


def compare_feature_sets(
    results_by_variant: dict[str, list[ModelResult]], score: str = "f_measure"
) -> dict[tuple[str, str], StatTestResult]:
    """Pairwise Wilcoxon tests between feature-set variants, paired by config_id."""
    if score not in SCORE_NAMES:
        raise ValueError(f"unknown score {score!r}")
    vectors: dict[str, dict[int, float]] = {}
    for variant, results in results_by_variant.items():
        vectors[variant] = {r.config_id: getattr(r, score) for r in results}

    tests: dict[tuple[str, str], StatTestResult] = {}
    for a, b in VARIANT_PAIRS:
        if a not in vectors or b not in vectors:
            continue
        if set(vectors[a]) != set(vectors[b]):
            raise ValueError(f"variants {a!r} and {b!r} cover different config_ids")
        ids = sorted(vectors[a])
        tests[(a, b)] = wilcoxon_signed_rank(
            [vectors[a][i] for i in ids], [vectors[b][i] for i in ids]
        )
    return tests


# -- report emission --

RANKING_COLUMNS = (
    "rank",
    "config_id",
    "algorithm",
    "variant",
    "accuracy",
    "precision",
    "recall",
    "f_measure",
    "mcc",
)


def emit_report(
    results: list[ModelResult],
    tests: dict[tuple[str, str], StatTestResult] | None = None,
    top_k: int = 10,
) -> dict[str, bytes]:
    """Deterministic report bundle: per-score ranking CSVs, the best
    configuration per algorithm (Table-3 layout), the significance CSV, and
    a Markdown mirror of all of it."""
    artifacts: dict[str, bytes] = {}
    md = io.StringIO()
    md.write("# Model evaluation report\n")

    for score in ("recall", "precision", "f_measure"):
        top = rank_models(results, score, top_k)
        artifacts[f"ranking_{score}.csv"] = _ranking_csv(top)
        md.write(f"\n## Top {len(top)} by {score}\n\n")
        _ranking_markdown(md, top)

    best = best_by_algorithm(results)
    artifacts["best_by_algorithm.csv"] = _best_csv(best)
    md.write("\n## Best configuration per algorithm (by F-measure)\n\n")
    _best_markdown(md, best)

    if tests:
        artifacts["significance.csv"] = _significance_csv(tests)
        md.write("\n## Wilcoxon signed-rank tests\n\n")
        md.write("| pair | T | p-value | n | method |\n|---|---|---|---|---|\n")
        for (a, b), t in sorted(tests.items()):
            md.write(
                f"| {a} vs {b} | {t.T:g} | {t.p_value:.6g} | {t.n_effective} | {t.method} |\n"
            )

    artifacts["report.md"] = md.getvalue().encode("utf-8")
    return artifacts


def best_by_algorithm(results: list[ModelResult]) -> list[ModelResult]:
    best: dict[str, ModelResult] = {}
    for r in sorted(results, key=lambda r: (-r.f_measure, r.config_id, r.variant)):
        best.setdefault(r.algorithm, r)
    return sorted(best.values(), key=lambda r: -r.f_measure)


def _fmt(value: float) -> str:
    return f"{value:.6f}"


def _ranking_csv(top: list[ModelResult]) -> bytes:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(RANKING_COLUMNS)
    for rank, r in enumerate(top, start=1):
        writer.writerow(
            [
                rank,
                r.config_id,
                r.algorithm,
                r.variant,
                _fmt(r.accuracy),
                _fmt(r.precision),
                _fmt(r.recall),
                _fmt(r.f_measure),
                _fmt(r.mcc),
            ]
        )
    return out.getvalue().encode("utf-8")


def _ranking_markdown(md: io.StringIO, top: list[ModelResult]) -> None:
    md.write("| rank | config | algorithm | variant | acc | prec | rec | F | MCC |\n")
    md.write("|---|---|---|---|---|---|---|---|---|\n")
    for rank, r in enumerate(top, start=1):
        md.write(
            f"| {rank} | {r.config_id} | {r.algorithm} | {r.variant} "
            f"| {r.accuracy:.3f} | {r.precision:.3f} | {r.recall:.3f} "
            f"| {r.f_measure:.3f} | {r.mcc:.3f} |\n"
        )


def _best_csv(best: list[ModelResult]) -> bytes:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(
        ["algorithm", "variant", "config_id", "accuracy", "precision", "recall", "f_measure", "mcc"]
    )
    for r in best:
        writer.writerow(
            [
                r.algorithm,
                r.variant,
                r.config_id,
                _fmt(r.accuracy),
                _fmt(r.precision),
                _fmt(r.recall),
                _fmt(r.f_measure),
                _fmt(r.mcc),
            ]
        )
    return out.getvalue().encode("utf-8")


def _best_markdown(md: io.StringIO, best: list[ModelResult]) -> None:
    md.write("| algorithm | feature set | accuracy | precision | recall | F-measure | MCC |\n")
    md.write("|---|---|---|---|---|---|---|\n")
    for r in best:
        md.write(
            f"| {r.algorithm} | {r.variant} | {r.accuracy:.3f} | {r.precision:.3f} "
            f"| {r.recall:.3f} | {r.f_measure:.3f} | {r.mcc:.3f} |\n"
        )


def _significance_csv(tests: dict[tuple[str, str], StatTestResult]) -> bytes:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["pair", "T", "p_value", "n_effective", "method"])
    for (a, b), t in sorted(tests.items()):
        writer.writerow([f"{a} vs {b}", f"{t.T:g}", f"{t.p_value:.12g}", t.n_effective, t.method])
    return out.getvalue().encode("utf-8")
