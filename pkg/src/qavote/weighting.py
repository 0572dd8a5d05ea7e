"""Voting weights derived from pre-evaluation reports.

Class-specific weights: a model's weight for a class is its mean F1 (or EM
rate) over the pre-evaluation questions of that class. Global weights: the
same mean over all pre-evaluation questions, used both for the
class-ignoring ensemble variant and as the fallback for classes with no
pre-evaluation questions. The globally best model (highest global weight,
ties to earlier model order) answers undefined-class questions.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .metrics import ClassStats, EvalReport
from .taxonomy import CLASS_LABELS


class MetricBasis(str, enum.Enum):
    MEAN_F1 = "mean_f1"
    EM_RATE = "em_rate"

    def __str__(self) -> str:
        return self.value


class WeightError(ValueError):
    """Raised for inconsistent report sets or malformed weight files."""


@dataclass(frozen=True)
class WeightTable:
    """Per-(class, model) and global voting weights, all within [0, 1]."""

    models: tuple[str, ...]
    metric_basis: MetricBasis
    class_weights: dict[str, dict[str, float]]  # class label -> model -> weight
    global_weights: dict[str, float]
    best_overall: str

    def __post_init__(self):
        if not self.models:
            raise WeightError("weight table needs at least one model")
        for model, weight in self.global_weights.items():
            _check_weight(weight, f"global weight of {model!r}")
        for label, row in self.class_weights.items():
            if set(row) != set(self.models):
                raise WeightError(f"class {label!r} is missing weights for some models")
            for model, weight in row.items():
                _check_weight(weight, f"weight of {model!r} in class {label!r}")
        if self.best_overall != _argmax_model(self.models, self.global_weights):
            raise WeightError("best_overall does not match the global-weight argmax")

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(self.class_weights)

    def weight_for(self, model: str, label: str) -> float:
        """Class weight for (model, label); unknown labels fall back globally."""
        if model not in self.global_weights:
            raise WeightError(f"unknown model {model!r}")
        row = self.class_weights.get(label)
        if row is None:
            return self.global_weights[model]
        return row[model]

    def to_json_dict(self) -> dict:
        return {
            "models": list(self.models),
            "metric_basis": self.metric_basis.value,
            "global": dict(self.global_weights),
            "classes": {label: dict(row) for label, row in self.class_weights.items()},
            "best_overall": self.best_overall,
        }

    @classmethod
    def from_json_dict(cls, data: Mapping) -> "WeightTable":
        try:
            return cls(
                models=tuple(data["models"]),
                metric_basis=MetricBasis(data["metric_basis"]),
                class_weights={
                    label: {m: float(w) for m, w in row.items()}
                    for label, row in data["classes"].items()
                },
                global_weights={m: float(w) for m, w in data["global"].items()},
                best_overall=data["best_overall"],
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise WeightError(f"malformed weight table: {exc}") from exc


def _check_weight(weight: float, what: str) -> None:
    if not 0.0 <= weight <= 1.0:
        raise WeightError(f"{what} out of [0, 1]: {weight}")


def _argmax_model(models: Sequence[str], weights: Mapping[str, float]) -> str:
    best = models[0]
    for model in models[1:]:
        if weights[model] > weights[best]:
            best = model
    return best


def _basis_value(stats: ClassStats, basis: MetricBasis) -> float:
    return stats.mean_f1 if basis is MetricBasis.MEAN_F1 else stats.em_rate


def _check_reports(reports: Mapping[str, EvalReport]) -> None:
    if not reports:
        raise WeightError("need at least one model report")
    id_sets = {model: frozenset(report.per_question) for model, report in reports.items()}
    first_model = next(iter(id_sets))
    for model, ids in id_sets.items():
        if ids != id_sets[first_model]:
            raise WeightError(
                f"pre-evaluation id sets differ between {first_model!r} and {model!r}"
            )


def compute_class_weights(
    reports: Mapping[str, EvalReport],
    basis: MetricBasis | str = MetricBasis.MEAN_F1,
    labels: Sequence[str] = CLASS_LABELS,
) -> WeightTable:
    """Class-specific weight table from per-model pre-evaluation reports.

    ``labels`` is the classifier's label universe; classes with no
    pre-evaluation questions get the model's global weight. Model order
    follows the ``reports`` mapping order and is the tie-break order
    everywhere downstream.
    """
    _check_reports(reports)
    basis = MetricBasis(basis)
    models = tuple(reports)
    global_weights = {
        model: _basis_value(report.overall, basis) for model, report in reports.items()
    }
    all_labels = list(labels)
    for report in reports.values():
        for label in report.per_class:
            if label not in all_labels:
                all_labels.append(label)
    class_weights: dict[str, dict[str, float]] = {}
    for label in all_labels:
        row = {}
        for model in models:
            stats = reports[model].per_class.get(label)
            if stats is None or stats.count == 0:
                row[model] = global_weights[model]
            else:
                row[model] = _basis_value(stats, basis)
        class_weights[label] = row
    return WeightTable(
        models=models,
        metric_basis=basis,
        class_weights=class_weights,
        global_weights=global_weights,
        best_overall=_argmax_model(models, global_weights),
    )


def compute_global_weights(
    reports: Mapping[str, EvalReport],
    basis: MetricBasis | str = MetricBasis.MEAN_F1,
    labels: Sequence[str] = CLASS_LABELS,
) -> WeightTable:
    """Degenerate table: every class slot holds the model's global weight.

    Feeding this to the class-aware voter (with the undefined special case
    off) reproduces the class-ignoring ensemble exactly.
    """
    _check_reports(reports)
    basis = MetricBasis(basis)
    models = tuple(reports)
    global_weights = {
        model: _basis_value(report.overall, basis) for model, report in reports.items()
    }
    all_labels = list(labels)
    for report in reports.values():
        for label in report.per_class:
            if label not in all_labels:
                all_labels.append(label)
    class_weights = {label: dict(global_weights) for label in all_labels}
    return WeightTable(
        models=models,
        metric_basis=basis,
        class_weights=class_weights,
        global_weights=global_weights,
        best_overall=_argmax_model(models, global_weights),
    )


def save_weights(table: WeightTable, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(table.to_json_dict(), fh, ensure_ascii=False, indent=1)
        fh.write("\n")


def load_weights(path: str | Path) -> WeightTable:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise WeightError(f"{path}: not valid JSON: {exc}") from exc
    return WeightTable.from_json_dict(data)
