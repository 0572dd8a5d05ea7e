"""Dataset and prediction-file ingestion plus the deterministic holdout split.

File formats:
  * dataset: SQuAD v1.1 JSON, {"version", "data": [{"title", "paragraphs":
    [{"context", "qas": [{"id", "question", "answers": [{"text",
    "answer_start"}]}]}]}]}
  * predictions: flat JSON object {question_id: answer_string}
  * split manifest: {"fraction", "seed", "granularity", "pre_eval_ids"}

The splitter orders units (questions, or whole paragraphs) by a seeded hash
of their id and takes the prefix, so identical inputs always produce a
byte-identical split regardless of platform or interpreter version.
"""
from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping


class SchemaError(ValueError):
    """Input file violates the expected schema; message carries the JSON path."""


@dataclass(frozen=True)
class QaItem:
    """One question: its paragraph context and the accepted gold answers."""

    id: str
    question: str
    context: str
    gold_answers: tuple[str, ...]
    answer_starts: tuple[int, ...]

    def __post_init__(self):
        if not self.gold_answers:
            raise SchemaError(f"question {self.id!r}: gold_answers is empty")
        if len(self.answer_starts) != len(self.gold_answers):
            raise SchemaError(
                f"question {self.id!r}: {len(self.answer_starts)} answer_starts "
                f"for {len(self.gold_answers)} gold_answers"
            )


@dataclass(frozen=True)
class ParagraphGroup:
    """All questions sharing one context paragraph."""

    key: str
    title: str
    context: str
    item_ids: tuple[str, ...]


@dataclass(frozen=True)
class Dataset:
    """An ordered, immutable collection of QaItems grouped by paragraph."""

    items: tuple[QaItem, ...]
    provenance: str
    groups: tuple[ParagraphGroup, ...]

    def __post_init__(self):
        ids = [item.id for item in self.items]
        if len(set(ids)) != len(ids):
            seen, dupes = set(), set()
            for i in ids:
                (dupes if i in seen else seen).add(i)
            raise SchemaError(f"duplicate question ids: {sorted(dupes)[:5]}")
        grouped = [qid for group in self.groups for qid in group.item_ids]
        if sorted(grouped) != sorted(ids):
            raise SchemaError("paragraph groups do not partition the item ids")

    def __len__(self) -> int:
        return len(self.items)

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(item.id for item in self.items)

    def by_id(self) -> dict[str, QaItem]:
        return {item.id: item for item in self.items}

    def group_of(self) -> dict[str, str]:
        """Map question id -> paragraph group key."""
        return {qid: g.key for g in self.groups for qid in g.item_ids}

    def subset(self, keep_ids: Iterable[str], provenance: str) -> "Dataset":
        """New Dataset with only ``keep_ids``, preserving item and group order."""
        keep = set(keep_ids)
        items = tuple(item for item in self.items if item.id in keep)
        groups = []
        for group in self.groups:
            kept = tuple(qid for qid in group.item_ids if qid in keep)
            if kept:
                groups.append(
                    ParagraphGroup(key=group.key, title=group.title, context=group.context, item_ids=kept)
                )
        return Dataset(items=items, provenance=provenance, groups=tuple(groups))


@dataclass(frozen=True)
class PredictionSet:
    """A named model's answers, keyed by question id.

    May cover only a subset of a dataset's questions; the gap is handled by
    the evaluation missing-prediction policy, not here. ``meta`` carries
    generator-side annotations (e.g. synthetic fallback ids) and is not part
    of the on-disk format.
    """

    model_name: str
    answers: Mapping[str, str]
    meta: Mapping[str, object] = field(default_factory=dict, compare=False)

    def __len__(self) -> int:
        return len(self.answers)


class Granularity(str, enum.Enum):
    QUESTION = "question"
    PARAGRAPH = "paragraph"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class SplitResult:
    train: Dataset
    pre_eval: Dataset
    fraction: float
    seed: int
    granularity: Granularity

    def manifest(self) -> dict:
        """JSON-ready manifest sufficient to re-materialize this split."""
        return {
            "fraction": self.fraction,
            "seed": self.seed,
            "granularity": self.granularity.value,
            "pre_eval_ids": list(self.pre_eval.ids),
        }


def _require(mapping, key, path):
    if not isinstance(mapping, dict) or key not in mapping:
        raise SchemaError(f"missing required field at {path}.{key}")
    return mapping[key]


def dataset_from_squad_dict(data: dict, provenance: str) -> Dataset:
    """Build a Dataset from already-parsed SQuAD-format JSON."""
    articles = _require(data, "data", "$")
    if not isinstance(articles, list):
        raise SchemaError("field $.data must be a list")
    items: list[QaItem] = []
    groups: list[ParagraphGroup] = []
    for a_idx, article in enumerate(articles):
        a_path = f"$.data[{a_idx}]"
        title = article.get("title", "") if isinstance(article, dict) else ""
        paragraphs = _require(article, "paragraphs", a_path)
        for p_idx, paragraph in enumerate(paragraphs):
            p_path = f"{a_path}.paragraphs[{p_idx}]"
            context = _require(paragraph, "context", p_path)
            qas = _require(paragraph, "qas", p_path)
            group_ids = []
            for q_idx, qa in enumerate(qas):
                q_path = f"{p_path}.qas[{q_idx}]"
                qid = _require(qa, "id", q_path)
                question = _require(qa, "question", q_path)
                answers = _require(qa, "answers", q_path)
                if not isinstance(answers, list) or not answers:
                    raise SchemaError(f"empty or invalid answers list at {q_path}.answers")
                golds, starts = [], []
                for ans_idx, answer in enumerate(answers):
                    ans_path = f"{q_path}.answers[{ans_idx}]"
                    golds.append(_require(answer, "text", ans_path))
                    starts.append(int(_require(answer, "answer_start", ans_path)))
                items.append(
                    QaItem(
                        id=str(qid),
                        question=str(question),
                        context=str(context),
                        gold_answers=tuple(golds),
                        answer_starts=tuple(starts),
                    )
                )
                group_ids.append(str(qid))
            groups.append(
                ParagraphGroup(
                    key=f"p{a_idx:05d}_{p_idx:05d}",
                    title=str(title),
                    context=str(context),
                    item_ids=tuple(group_ids),
                )
            )
    return Dataset(items=tuple(items), provenance=provenance, groups=tuple(groups))


def load_dataset(path: str | Path) -> Dataset:
    """Load a SQuAD v1.1 JSON file. Duplicate question ids are a hard error."""
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: not valid JSON: {exc}") from exc
    return dataset_from_squad_dict(data, provenance=str(path))


def dataset_to_squad_dict(dataset: Dataset, version: str = "1.1") -> dict:
    """Inverse of dataset_from_squad_dict; articles keep first-seen title order."""
    by_id = dataset.by_id()
    articles: list[dict] = []
    article_index: dict[str, int] = {}
    for group in dataset.groups:
        if group.title not in article_index:
            article_index[group.title] = len(articles)
            articles.append({"title": group.title, "paragraphs": []})
        qas = []
        for qid in group.item_ids:
            item = by_id[qid]
            qas.append(
                {
                    "id": item.id,
                    "question": item.question,
                    "answers": [
                        {"text": text, "answer_start": start}
                        for text, start in zip(item.gold_answers, item.answer_starts)
                    ],
                }
            )
        articles[article_index[group.title]]["paragraphs"].append(
            {"context": group.context, "qas": qas}
        )
    return {"version": version, "data": articles}


def save_dataset(dataset: Dataset, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(dataset_to_squad_dict(dataset), fh, ensure_ascii=False)
        fh.write("\n")


def load_predictions(path: str | Path, model_name: str) -> PredictionSet:
    """Load a flat {id: answer} prediction file; strings kept byte-for-byte."""
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise SchemaError(f"{path}: prediction file must be a JSON object")
    for qid, answer in raw.items():
        if not isinstance(answer, str):
            raise SchemaError(f"{path}: value for id {qid!r} is not a string")
    return PredictionSet(model_name=model_name, answers=dict(raw))


def save_predictions(predictions: PredictionSet, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(dict(predictions.answers), fh, ensure_ascii=False)
        fh.write("\n")


def _unit_sort_key(seed: int, unit_id: str) -> tuple[str, str]:
    digest = hashlib.sha256(f"{seed}:{unit_id}".encode("utf-8")).hexdigest()
    return (digest, unit_id)


def split_pre_eval(
    dataset: Dataset,
    fraction: float,
    seed: int,
    granularity: Granularity | str = Granularity.QUESTION,
) -> SplitResult:
    """Hold out a pre-evaluation slice of ~``fraction`` of the questions.

    Units (single questions, or whole paragraphs) are ordered by a seeded
    hash and moved into the holdout until its question count first reaches
    or exceeds ``fraction * len(dataset)``. Paragraph granularity never
    separates questions sharing a paragraph.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"fraction must be within [0, 1], got {fraction}")
    granularity = Granularity(granularity)

    if granularity is Granularity.QUESTION:
        units = [(item.id, (item.id,)) for item in dataset.items]
    else:
        units = [(group.key, group.item_ids) for group in dataset.groups]

    target = fraction * len(dataset)
    ordered = sorted(units, key=lambda unit: _unit_sort_key(seed, unit[0]))
    pre_eval_ids: set[str] = set()
    count = 0
    for _, qids in ordered:
        if count >= target:
            break
        pre_eval_ids.update(qids)
        count += len(qids)

    pre_eval = dataset.subset(pre_eval_ids, provenance=f"{dataset.provenance}[pre_eval]")
    train_ids = [qid for qid in dataset.ids if qid not in pre_eval_ids]
    train = dataset.subset(train_ids, provenance=f"{dataset.provenance}[train]")
    return SplitResult(
        train=train, pre_eval=pre_eval, fraction=fraction, seed=seed, granularity=granularity
    )


def save_split_manifest(split: SplitResult, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(split.manifest(), fh, ensure_ascii=False, indent=1)
        fh.write("\n")


def materialize_split(dataset: Dataset, manifest: Mapping) -> SplitResult:
    """Rebuild the exact SplitResult a saved manifest describes."""
    pre_eval_ids = set(manifest["pre_eval_ids"])
    known = set(dataset.ids)
    unknown = pre_eval_ids - known
    if unknown:
        raise SchemaError(f"manifest pre_eval_ids not in dataset: {sorted(unknown)[:5]}")
    pre_eval = dataset.subset(pre_eval_ids, provenance=f"{dataset.provenance}[pre_eval]")
    train = dataset.subset(
        [qid for qid in dataset.ids if qid not in pre_eval_ids],
        provenance=f"{dataset.provenance}[train]",
    )
    return SplitResult(
        train=train,
        pre_eval=pre_eval,
        fraction=float(manifest["fraction"]),
        seed=int(manifest["seed"]),
        granularity=Granularity(manifest["granularity"]),
    )


def load_split_manifest(path: str | Path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
