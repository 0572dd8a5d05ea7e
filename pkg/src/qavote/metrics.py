"""Answer normalization, per-question EM / token-F1, and report aggregation.

Normalization lowercases, strips punctuation characters (Unicode P*
categories plus every ASCII punctuation character, so behaviour on ASCII
text matches the community-standard evaluation script), drops the articles
"a", "an", "the" as whole tokens, and splits on whitespace. Both metrics
take the maximum over all gold answers. One deliberate edge: a prediction
and gold that both normalize to nothing score em=True, f1=1.0, keeping the
``em implies f1 == 1`` invariant.
"""
from __future__ import annotations

import csv
import enum
import io
import json
import string
import unicodedata
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

from .corpus import Dataset, PredictionSet

_ARTICLES = frozenset({"a", "an", "the"})
_ASCII_PUNCT = frozenset(string.punctuation)


def _keep(ch: str) -> bool:
    return ch not in _ASCII_PUNCT and not unicodedata.category(ch).startswith("P")


def normalize_answer(text: str) -> list[str]:
    """Normalized token list: lowercased, punctuation and articles removed."""
    cleaned = "".join(ch for ch in text.lower() if _keep(ch))
    return [tok for tok in cleaned.split() if tok not in _ARTICLES]


def em(prediction: str, golds: Sequence[str]) -> bool:
    """True iff the normalized prediction equals some normalized gold."""
    if not golds:
        raise ValueError("golds must be non-empty")
    pred_tokens = normalize_answer(prediction)
    return any(pred_tokens == normalize_answer(g) for g in golds)


def _f1_single(pred_tokens: list[str], gold_tokens: list[str]) -> float:
    if not pred_tokens and not gold_tokens:
        return 1.0
    overlap = sum((Counter(pred_tokens) & Counter(gold_tokens)).values())
    if overlap == 0:
        return 0.0
    precision = overlap / len(pred_tokens)
    recall = overlap / len(gold_tokens)
    return (2 * precision * recall) / (precision + recall)


def token_f1(prediction: str, golds: Sequence[str]) -> float:
    """Max over golds of the token-multiset F1 between prediction and gold."""
    if not golds:
        raise ValueError("golds must be non-empty")
    pred_tokens = normalize_answer(prediction)
    return max(_f1_single(pred_tokens, normalize_answer(g)) for g in golds)


def score_pair(prediction: str, golds: Sequence[str]) -> tuple[float, bool]:
    """(token_f1, em) for one prediction against its golds."""
    return token_f1(prediction, golds), em(prediction, golds)


class MissingPolicy(str, enum.Enum):
    """How to score dataset questions absent from a prediction set."""

    SCORE_AS_EMPTY = "score_as_empty"  # treat as an empty-string prediction
    EXCLUDE = "exclude"  # drop from the report entirely

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class QuestionScore:
    id: str
    f1: float
    em: bool

    def __post_init__(self):
        if not 0.0 <= self.f1 <= 1.0:
            raise ValueError(f"f1 out of range for {self.id!r}: {self.f1}")
        if self.em and self.f1 != 1.0:
            raise ValueError(f"em=True with f1={self.f1} for {self.id!r}")


@dataclass(frozen=True)
class ClassStats:
    mean_f1: float
    em_rate: float
    count: int


@dataclass(frozen=True)
class EvalReport:
    """Per-question scores with per-class and overall aggregates."""

    per_question: dict[str, QuestionScore]
    per_class: dict[str, ClassStats]
    overall: ClassStats
    model: str = ""
    missing_policy: MissingPolicy = MissingPolicy.SCORE_AS_EMPTY

    def to_json_dict(self) -> dict:
        return {
            "model": self.model,
            "missing_policy": self.missing_policy.value,
            "overall": {
                "mean_f1": self.overall.mean_f1,
                "em_rate": self.overall.em_rate,
                "count": self.overall.count,
            },
            "per_class": {
                label: {"mean_f1": s.mean_f1, "em_rate": s.em_rate, "count": s.count}
                for label, s in self.per_class.items()
            },
            "per_question": {
                qid: {"f1": score.f1, "em": score.em}
                for qid, score in sorted(self.per_question.items())
            },
        }

    def to_csv(self) -> str:
        """CSV rows (class, count, mean_f1, em_rate) plus an overall row.

        Metric cells are percentages rendered at 2 decimals; underlying
        values stay full precision in the JSON export.
        """
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["class", "count", "mean_f1", "em_rate"])
        for label, stats in self.per_class.items():
            writer.writerow(
                [label, stats.count, f"{100 * stats.mean_f1:.2f}", f"{100 * stats.em_rate:.2f}"]
            )
        writer.writerow(
            [
                "overall",
                self.overall.count,
                f"{100 * self.overall.mean_f1:.2f}",
                f"{100 * self.overall.em_rate:.2f}",
            ]
        )
        return buf.getvalue()


def report_from_scores(
    scores: Mapping[str, QuestionScore],
    labels_by_id: Mapping[str, str],
    model: str = "",
    missing_policy: MissingPolicy = MissingPolicy.SCORE_AS_EMPTY,
) -> EvalReport:
    """Aggregate per-question scores into an EvalReport.

    Aggregation order is fixed (sorted question ids), so reports are
    identical however the scores were produced.
    """
    per_class_scores: dict[str, list[QuestionScore]] = {}
    for qid in sorted(scores):
        per_class_scores.setdefault(labels_by_id[qid], []).append(scores[qid])

    def stats(bucket: list[QuestionScore]) -> ClassStats:
        n = len(bucket)
        if n == 0:
            return ClassStats(mean_f1=0.0, em_rate=0.0, count=0)
        return ClassStats(
            mean_f1=sum(s.f1 for s in bucket) / n,
            em_rate=sum(1 for s in bucket if s.em) / n,
            count=n,
        )

    per_class = {label: stats(bucket) for label, bucket in sorted(per_class_scores.items())}
    return EvalReport(
        per_question=dict(scores),
        per_class=per_class,
        overall=stats([scores[qid] for qid in sorted(scores)]),
        model=model,
        missing_policy=missing_policy,
    )


def evaluate(
    predictions: PredictionSet,
    dataset: Dataset,
    classifier: Callable[[str], str],
    missing_policy: MissingPolicy | str = MissingPolicy.SCORE_AS_EMPTY,
    threads: int = 1,
) -> EvalReport:
    """Score a prediction set against a dataset, bucketed by question class.

    Questions absent from ``predictions`` are scored as empty-string
    predictions or excluded, per ``missing_policy``. Results are independent
    of ``threads``.
    """
    missing_policy = MissingPolicy(missing_policy)
    answers = predictions.answers

    def entry(item) -> tuple[str, QuestionScore, str] | None:
        prediction = answers.get(item.id)
        if prediction is None:
            if missing_policy is MissingPolicy.EXCLUDE:
                return None
            prediction = ""
        f1, em_flag = score_pair(prediction, item.gold_answers)
        return item.id, QuestionScore(id=item.id, f1=f1, em=em_flag), classifier(item.question)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(entry, dataset.items))
    else:
        results = [entry(item) for item in dataset.items]

    scores: dict[str, QuestionScore] = {}
    labels: dict[str, str] = {}
    for result in results:
        if result is None:
            continue
        qid, score, label = result
        scores[qid] = score
        labels[qid] = label
    return report_from_scores(
        scores, labels, model=predictions.model_name, missing_policy=missing_policy
    )


def save_report_json(report: EvalReport, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.to_json_dict(), fh, ensure_ascii=False, indent=1)
        fh.write("\n")


def save_report_csv(report: EvalReport, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(report.to_csv())
