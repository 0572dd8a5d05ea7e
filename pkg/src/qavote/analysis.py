"""Pairwise prediction-similarity statistics and tabular report exports.

For each question both models are scored against gold; the pair report
counts, per class, how often the two F1 values are exactly equal and how
often the two EM flags agree. Both scores come from the same scoring
function, so F1 equality is exact float equality, no epsilon.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Callable, Sequence

from .corpus import Dataset, PredictionSet
from .metrics import EvalReport, MissingPolicy, score_pair


@dataclass(frozen=True)
class SimTriple:
    equal_f1: int
    equal_em: int
    total: int


@dataclass(frozen=True)
class SimilarityReport:
    model_a: str
    model_b: str
    per_class: dict[str, SimTriple]
    overall: SimTriple
    mean_of_equal_f1s: float
    equal_em_true_count: int
    equal_em_true_rate: float

    def to_json_dict(self) -> dict:
        def triple(t: SimTriple) -> dict:
            return {"equal_f1": t.equal_f1, "equal_em": t.equal_em, "total": t.total}

        return {
            "model_a": self.model_a,
            "model_b": self.model_b,
            "per_class": {label: triple(t) for label, t in self.per_class.items()},
            "overall": triple(self.overall),
            "mean_of_equal_f1s": self.mean_of_equal_f1s,
            "equal_em_true_count": self.equal_em_true_count,
            "equal_em_true_rate": self.equal_em_true_rate,
        }


def pairwise_similarity(
    preds_a: PredictionSet,
    preds_b: PredictionSet,
    dataset: Dataset,
    classifier: Callable[[str], str],
    missing_policy: MissingPolicy | str = MissingPolicy.SCORE_AS_EMPTY,
) -> SimilarityReport:
    """Count equal-F1 and equal-EM questions per class for a model pair.

    With the default policy a question missing from one set is scored as an
    empty prediction, so totals stay at the dataset size; with ``exclude``
    only questions answered by both models are counted.
    """
    missing_policy = MissingPolicy(missing_policy)
    counts: dict[str, list[int]] = {}
    label_order: list[str] = []
    equal_f1_sum = 0.0
    equal_f1_n = 0
    equal_em_true = 0
    for item in dataset.items:
        raw_a = preds_a.answers.get(item.id)
        raw_b = preds_b.answers.get(item.id)
        if missing_policy is MissingPolicy.EXCLUDE and (raw_a is None or raw_b is None):
            continue
        f1_a, em_a = score_pair(raw_a or "", item.gold_answers)
        f1_b, em_b = score_pair(raw_b or "", item.gold_answers)
        label = classifier(item.question)
        if label not in counts:
            counts[label] = [0, 0, 0]
            label_order.append(label)
        bucket = counts[label]
        bucket[2] += 1
        if f1_a == f1_b:
            bucket[0] += 1
            equal_f1_sum += f1_a
            equal_f1_n += 1
        if em_a == em_b:
            bucket[1] += 1
            if em_a:
                equal_em_true += 1

    labels = getattr(classifier, "labels", ())
    ordered = [label for label in labels if label in counts]
    ordered += [label for label in label_order if label not in ordered]
    per_class = {label: SimTriple(*counts[label]) for label in ordered}
    overall = SimTriple(
        equal_f1=sum(t.equal_f1 for t in per_class.values()),
        equal_em=sum(t.equal_em for t in per_class.values()),
        total=sum(t.total for t in per_class.values()),
    )
    equal_em_total = overall.equal_em
    return SimilarityReport(
        model_a=preds_a.model_name,
        model_b=preds_b.model_name,
        per_class=per_class,
        overall=overall,
        mean_of_equal_f1s=equal_f1_sum / equal_f1_n if equal_f1_n else 0.0,
        equal_em_true_count=equal_em_true,
        equal_em_true_rate=equal_em_true / equal_em_total if equal_em_total else 0.0,
    )


def _pct(part: int, whole: int) -> str:
    return f"{100 * part / whole:.1f}%" if whole else "0.0%"


def similarity_csv(report: SimilarityReport) -> str:
    """Per-class agreement table: count cells carry their percentage."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["class", "equal_f1", "equal_em", "total"])
    for label, t in report.per_class.items():
        writer.writerow(
            [
                label,
                f"{t.equal_f1} ({_pct(t.equal_f1, t.total)})",
                f"{t.equal_em} ({_pct(t.equal_em, t.total)})",
                t.total,
            ]
        )
    o = report.overall
    writer.writerow(
        [
            "SUM",
            f"{o.equal_f1} ({_pct(o.equal_f1, o.total)})",
            f"{o.equal_em} ({_pct(o.equal_em, o.total)})",
            o.total,
        ]
    )
    return buf.getvalue()


def eval_breakdown_csv(reports: Sequence[EvalReport]) -> str:
    """Side-by-side per-class metrics for several reports over one dataset."""
    if not reports:
        raise ValueError("need at least one report")
    labels: list[str] = []
    for report in reports:
        for label in report.per_class:
            if label not in labels:
                labels.append(label)
    header = ["class", "count"]
    for report in reports:
        name = report.model or "model"
        header += [f"{name}_f1", f"{name}_em"]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for label in labels:
        counts = {r.per_class[label].count for r in reports if label in r.per_class}
        if len(counts) > 1:
            raise ValueError(f"reports disagree on the count for class {label!r}")
        row = [label, counts.pop() if counts else 0]
        for report in reports:
            stats = report.per_class.get(label)
            if stats is None:
                row += ["", ""]
            else:
                row += [f"{100 * stats.mean_f1:.2f}", f"{100 * stats.em_rate:.2f}"]
        writer.writerow(row)
    sum_counts = {r.overall.count for r in reports}
    if len(sum_counts) > 1:
        raise ValueError("reports disagree on the overall count")
    sum_row: list = ["SUM", sum_counts.pop()]
    for report in reports:
        sum_row += [f"{100 * report.overall.mean_f1:.2f}", f"{100 * report.overall.em_rate:.2f}"]
    writer.writerow(sum_row)
    return buf.getvalue()


def export_breakdown(reports: SimilarityReport | EvalReport | Sequence[EvalReport]) -> str:
    """CSV for either report kind: one row per class plus a SUM row."""
    if isinstance(reports, SimilarityReport):
        return similarity_csv(reports)
    if isinstance(reports, EvalReport):
        return eval_breakdown_csv([reports])
    return eval_breakdown_csv(list(reports))


def save_similarity_json(report: SimilarityReport, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.to_json_dict(), fh, ensure_ascii=False, indent=1)
        fh.write("\n")
