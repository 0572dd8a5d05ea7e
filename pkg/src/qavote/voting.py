"""Weighted voting over per-model candidate answers.

One vote per question: each model's answer gets its weight from the weight
table (per-class weights, or each model's global weight when class-ignoring
mode is selected). Answers that are duplicates of each other, raw or
normalized string equality by configuration, form a group whose weights are
combined by sum (default) or max; the heaviest group wins. Undefined-class
questions are answered by the globally best model when the special case is
enabled. All ties break toward the earlier model in the table's model order.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

from .corpus import Dataset, PredictionSet
from .metrics import normalize_answer
from .taxonomy import UNDEFINED
from .weighting import WeightTable


class VoteMode(str, enum.Enum):
    CLASS_AWARE = "class_aware"
    GLOBAL = "global"

    def __str__(self) -> str:
        return self.value


class Combine(str, enum.Enum):
    SUM = "sum"
    MAX = "max"

    def __str__(self) -> str:
        return self.value


class Equality(str, enum.Enum):
    RAW = "raw"
    NORMALIZED = "normalized"

    def __str__(self) -> str:
        return self.value


class Reason(str, enum.Enum):
    MERGED_DUPLICATES = "merged_duplicates"
    HIGHEST_WEIGHT_NO_DUPLICATES = "highest_weight_no_duplicates"
    UNDEFINED_FALLBACK = "undefined_fallback"

    def __str__(self) -> str:
        return self.value


class VoteError(ValueError):
    """Raised for empty candidate lists, unknown models, or stale weights."""


@dataclass(frozen=True)
class VoteConfig:
    """Voting variant switches; the defaults are the headline configuration.

    ``no_duplicate_fallback`` selects who answers when no duplicates exist:
    "class_best" (default) returns the heaviest candidate for this class,
    "best_overall" the globally best model's candidate. The latter is an
    alternative reading of the voting procedure kept only for comparison.
    """

    mode: VoteMode = VoteMode.CLASS_AWARE
    combine: Combine = Combine.SUM
    undefined_special_case: bool = True
    duplicate_equality: Equality = Equality.NORMALIZED
    no_duplicate_fallback: str = "class_best"

    def __post_init__(self):
        object.__setattr__(self, "mode", VoteMode(self.mode))
        object.__setattr__(self, "combine", Combine(self.combine))
        object.__setattr__(self, "duplicate_equality", Equality(self.duplicate_equality))
        if self.no_duplicate_fallback not in ("class_best", "best_overall"):
            raise ValueError(f"bad no_duplicate_fallback: {self.no_duplicate_fallback!r}")


@dataclass(frozen=True)
class Candidate:
    model: str
    answer: str
    weight: float


@dataclass(frozen=True)
class VoteGroup:
    """Candidates whose answers are duplicates under the configured equality."""

    key: str
    answer: str  # representative raw answer: the earliest member's
    models: tuple[str, ...]
    combined_weight: float


@dataclass(frozen=True)
class VoteTrace:
    question_id: str
    question_class: str
    candidates: tuple[Candidate, ...]
    groups: tuple[VoteGroup, ...]
    winner: Candidate
    reason: Reason

    def to_json_dict(self) -> dict:
        return {
            "question_id": self.question_id,
            "question_class": self.question_class,
            "candidates": [
                {"model": c.model, "answer": c.answer, "weight": c.weight}
                for c in self.candidates
            ],
            "groups": [
                {
                    "answer": g.answer,
                    "models": list(g.models),
                    "combined_weight": g.combined_weight,
                }
                for g in self.groups
            ],
            "winner": {"model": self.winner.model, "answer": self.winner.answer},
            "reason": self.reason.value,
        }


def table_weight(table: WeightTable, model: str, label: str, mode: VoteMode) -> float:
    if mode is VoteMode.GLOBAL:
        if model not in table.global_weights:
            raise VoteError(f"unknown model {model!r}")
        return table.global_weights[model]
    return table.weight_for(model, label)


def candidates_for(
    answers: Mapping[str, str] | Sequence[tuple[str, str]],
    question_class: str,
    table: WeightTable,
    config: VoteConfig = VoteConfig(),
) -> list[Candidate]:
    """Build candidates in table model order with their table weights."""
    if isinstance(answers, Mapping):
        pairs = dict(answers)
    else:
        pairs = dict(answers)
    unknown = set(pairs) - set(table.models)
    if unknown:
        raise VoteError(f"unknown models: {sorted(unknown)}")
    return [
        Candidate(
            model=model,
            answer=pairs[model],
            weight=table_weight(table, model, question_class, config.mode),
        )
        for model in table.models
        if model in pairs
    ]


def _group_key(answer: str, equality: Equality) -> str:
    if equality is Equality.RAW:
        return answer
    return " ".join(normalize_answer(answer))


def vote(
    candidates: Sequence[Candidate],
    question_class: str,
    table: WeightTable,
    config: VoteConfig = VoteConfig(),
    question_id: str = "",
) -> VoteTrace:
    """Decide one question. Candidate weights must match the table exactly."""
    if not candidates:
        raise VoteError("empty candidate list")
    model_order = {model: i for i, model in enumerate(table.models)}
    for candidate in candidates:
        if candidate.model not in model_order:
            raise VoteError(f"unknown model {candidate.model!r}")
        expected = table_weight(table, candidate.model, question_class, config.mode)
        if candidate.weight != expected:
            raise VoteError(
                f"candidate weight for {candidate.model!r} is {candidate.weight}, "
                f"table says {expected}"
            )
    ordered = sorted(candidates, key=lambda c: model_order[c.model])

    def by_model(name: str) -> Candidate:
        for candidate in ordered:
            if candidate.model == name:
                return candidate
        raise VoteError(f"no candidate for model {name!r}")

    if (
        config.mode is VoteMode.CLASS_AWARE
        and config.undefined_special_case
        and question_class == UNDEFINED
    ):
        return VoteTrace(
            question_id=question_id,
            question_class=question_class,
            candidates=tuple(ordered),
            groups=(),
            winner=by_model(table.best_overall),
            reason=Reason.UNDEFINED_FALLBACK,
        )

    grouped: dict[str, list[Candidate]] = {}
    for candidate in ordered:
        grouped.setdefault(_group_key(candidate.answer, config.duplicate_equality), []).append(
            candidate
        )
    groups = []
    for key, members in grouped.items():  # insertion order == model order of first member
        weights = [m.weight for m in members]
        combined = sum(weights) if config.combine is Combine.SUM else max(weights)
        groups.append(
            VoteGroup(
                key=key,
                answer=members[0].answer,
                models=tuple(m.model for m in members),
                combined_weight=combined,
            )
        )

    if any(len(g.models) >= 2 for g in groups):
        best = groups[0]
        for group in groups[1:]:
            if group.combined_weight > best.combined_weight:
                best = group
        winner = by_model(best.models[0])
        reason = Reason.MERGED_DUPLICATES
    elif config.no_duplicate_fallback == "best_overall" and config.mode is VoteMode.CLASS_AWARE:
        winner = by_model(table.best_overall)
        reason = Reason.HIGHEST_WEIGHT_NO_DUPLICATES
    else:
        winner = ordered[0]
        for candidate in ordered[1:]:
            if candidate.weight > winner.weight:
                winner = candidate
        reason = Reason.HIGHEST_WEIGHT_NO_DUPLICATES

    return VoteTrace(
        question_id=question_id,
        question_class=question_class,
        candidates=tuple(ordered),
        groups=tuple(groups),
        winner=winner,
        reason=reason,
    )


def run_ensemble(
    dataset: Dataset,
    predictions: Mapping[str, PredictionSet],
    table: WeightTable,
    classifier: Callable[[str], str],
    config: VoteConfig = VoteConfig(),
) -> tuple[PredictionSet, list[VoteTrace]]:
    """Vote every dataset question; missing answers become empty strings.

    The models in ``predictions`` must be exactly the table's models. Traces
    come back in dataset order.
    """
    if set(predictions) != set(table.models):
        raise VoteError(
            f"prediction models {sorted(predictions)} != table models {sorted(table.models)}"
        )
    out: dict[str, str] = {}
    traces: list[VoteTrace] = []
    for item in dataset.items:
        label = classifier(item.question)
        answers = {
            model: predictions[model].answers.get(item.id, "") for model in table.models
        }
        trace = vote(
            candidates_for(answers, label, table, config),
            label,
            table,
            config,
            question_id=item.id,
        )
        out[item.id] = trace.winner.answer
        traces.append(trace)
    return PredictionSet(model_name="ensemble", answers=out), traces


def save_traces(traces: Iterable[VoteTrace], path: str | Path) -> None:
    """Write one JSON object per line, in the given order."""
    with open(path, "w", encoding="utf-8") as fh:
        for trace in traces:
            fh.write(json.dumps(trace.to_json_dict(), ensure_ascii=False))
            fh.write("\n")
