"""Rule-based question classification.

Each question is assigned exactly one of fourteen classes: thirteen classes
anchored on question phrases ("what time", "how many", "whom", ...) plus an
``undefined`` fallback for questions that match no phrase. Rules are matched
case-insensitively anywhere in the question; when several rules match, the
highest-priority rule wins, so specific phrases ("what time") must outrank
the generic ones ("what"). "which" questions are folded into ``what``.

A word-count-based alternative classifier is provided for experiments that
bucket questions by length instead of by phrase.
"""
from __future__ import annotations

import enum
import json
import re
from bisect import bisect_right
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable


class QuestionClass(str, enum.Enum):
    """The fourteen question classes, in report row order (alphabetical).

    Values double as stable string labels.
    """

    DATE = "date"
    DURING = "during"
    HOW_ARE = "how_are"
    HOW_BIG_SIZE = "how_big_size"
    HOW_MUCH_MANY = "how_much_many"
    HOW_OLD = "how_old"
    UNDEFINED = "undefined"
    WHAT = "what"
    WHAT_TIME = "what_time"
    WHEN = "when"
    WHERE = "where"
    WHO = "who"
    WHOM = "whom"
    WHY = "why"

    def __str__(self) -> str:  # so f-strings print "what", not "QuestionClass.WHAT"
        return self.value


#: Canonical label order used by reports and exports.
CLASS_LABELS: tuple[str, ...] = tuple(c.value for c in QuestionClass)

UNDEFINED = QuestionClass.UNDEFINED.value


@dataclass(frozen=True)
class ClassRule:
    pattern: str
    question_class: QuestionClass
    priority: int

    def compiled(self) -> re.Pattern[str]:
        return re.compile(self.pattern, re.IGNORECASE)


class RuleError(ValueError):
    """Raised for an invalid rule file or rule list."""


class ClassRuleSet:
    """An ordered, immutable set of classification rules.

    Rules are checked in descending priority; the first match decides the
    class. Questions matching no rule are ``undefined``. Instances are
    callable: ``rules(question) -> str label``.
    """

    def __init__(self, rules: Iterable[ClassRule]):
        ordered = sorted(rules, key=lambda r: -r.priority)
        priorities = [r.priority for r in ordered]
        if len(set(priorities)) != len(priorities):
            raise RuleError("rule priorities must be unique")
        for rule in ordered:
            if rule.question_class is QuestionClass.UNDEFINED:
                raise RuleError("no rule may map to 'undefined'; it is the fallback")
        self._rules = tuple(ordered)
        self._compiled = tuple((r.compiled(), r.question_class) for r in ordered)

    @property
    def rules(self) -> tuple[ClassRule, ...]:
        return self._rules

    @property
    def labels(self) -> tuple[str, ...]:
        """Every label this classifier can emit (all fourteen classes)."""
        return CLASS_LABELS

    def classify(self, question: str) -> str:
        for pattern, question_class in self._compiled:
            if pattern.search(question):
                return question_class.value
        return UNDEFINED

    def __call__(self, question: str) -> str:
        return self.classify(question)

    def __len__(self) -> int:
        return len(self._rules)

    def to_json(self) -> list[dict]:
        return [
            {"pattern": r.pattern, "class": r.question_class.value, "priority": r.priority}
            for r in self._rules
        ]

    @classmethod
    def from_json(cls, entries: list[dict]) -> "ClassRuleSet":
        rules = []
        for i, entry in enumerate(entries):
            try:
                rules.append(
                    ClassRule(
                        pattern=entry["pattern"],
                        question_class=QuestionClass(entry["class"]),
                        priority=int(entry["priority"]),
                    )
                )
            except (KeyError, ValueError) as exc:
                raise RuleError(f"bad rule entry at index {i}: {exc}") from exc
        return cls(rules)


def load_rules(path: str | Path) -> ClassRuleSet:
    """Load a rule file (JSON list of {pattern, class, priority})."""
    with open(path, encoding="utf-8") as fh:
        try:
            entries = json.load(fh)
        except json.JSONDecodeError as exc:
            raise RuleError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(entries, list):
        raise RuleError(f"{path}: rule file must be a JSON list")
    return ClassRuleSet.from_json(entries)


def default_rules() -> ClassRuleSet:
    """The rule set shipped with the package."""
    data = resources.files("qavote").joinpath("data/default_rules.json").read_text("utf-8")
    return ClassRuleSet.from_json(json.loads(data))


def classify(question: str, rules: ClassRuleSet) -> str:
    """Class label of the highest-priority matching rule, else 'undefined'."""
    return rules.classify(question)


def question_length(question: str) -> int:
    """Question length in words (whitespace tokens after trimming)."""
    return len(question.split())


def classify_by_length(question: str, bucket_edges: list[int] | tuple[int, ...]) -> int:
    """Bucket index: first edge strictly greater than the word count wins.

    A count at or past the last edge lands in the final bucket
    (index ``len(bucket_edges)``).
    """
    edges = list(bucket_edges)
    if not edges:
        raise ValueError("bucket_edges must be non-empty")
    if any(b >= a for a, b in zip(edges[1:], edges)):
        raise ValueError("bucket_edges must be strictly increasing")
    return bisect_right(edges, question_length(question))


class LengthClassifier:
    """Length-bucket classifier exposing the same callable surface as rules.

    Emits labels ``len_0``, ..., ``len_<k>`` for k = len(edges) buckets plus
    the overflow bucket. It never emits ``undefined``, so the voting fallback
    for undefined questions stays inert under length classification.
    """

    def __init__(self, bucket_edges: Iterable[int]):
        self.edges = tuple(bucket_edges)
        if not self.edges:
            raise ValueError("bucket_edges must be non-empty")
        if any(b >= a for a, b in zip(self.edges[1:], self.edges)):
            raise ValueError("bucket_edges must be strictly increasing")

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(f"len_{i}" for i in range(len(self.edges) + 1))

    def __call__(self, question: str) -> str:
        return f"len_{classify_by_length(question, self.edges)}"


@dataclass(frozen=True)
class ClassHistogram:
    """Per-class question counts; counts always sum to total."""

    counts: dict[str, int]
    total: int

    def share(self, label: str) -> float:
        """Fraction of questions in ``label`` (0.0 for an empty histogram)."""
        if self.total == 0:
            return 0.0
        return self.counts.get(label, 0) / self.total


def class_distribution(dataset, classifier) -> ClassHistogram:
    """Histogram of ``dataset`` items over the classifier's labels.

    ``classifier`` is a ClassRuleSet, LengthClassifier, or any callable
    mapping question text to a label. Labels the classifier can emit but
    that occur zero times are present with count 0.
    """
    labels = getattr(classifier, "labels", ())
    counts: dict[str, int] = {label: 0 for label in labels}
    for item in dataset.items:
        label = classifier(item.question)
        counts[label] = counts.get(label, 0) + 1
    return ClassHistogram(counts=counts, total=len(dataset.items))
