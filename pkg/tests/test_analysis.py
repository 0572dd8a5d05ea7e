from __future__ import annotations

import json
import random

from helpers import gold_map, make_dataset

import pytest

from qavote.analysis import (
    eval_breakdown_csv,
    export_breakdown,
    pairwise_similarity,
    similarity_csv,
)
from qavote.corpus import PredictionSet
from qavote.metrics import MissingPolicy, evaluate


class TestPairwiseSimilarity:
    def test_identical_sets_saturate(self, rules, small_dataset):
        answers = gold_map(small_dataset)
        for i, qid in enumerate(answers):  # spread of scores, incl. non-gold
            if i % 3 == 0:
                answers[qid] = "granite bronze"
        a = PredictionSet("a", answers)
        b = PredictionSet("b", dict(answers))
        report = pairwise_similarity(a, b, small_dataset, rules)
        for triple in report.per_class.values():
            assert triple.equal_f1 == triple.equal_em == triple.total
        assert report.overall.total == len(small_dataset)
        eval_a = evaluate(a, small_dataset, rules)
        assert report.mean_of_equal_f1s == pytest.approx(eval_a.overall.mean_f1)

    def test_reflexive_comparison(self, rules, small_dataset):
        a = PredictionSet("a", gold_map(small_dataset))
        report = pairwise_similarity(a, a, small_dataset, rules)
        assert report.overall.equal_f1 == report.overall.total
        assert report.overall.equal_em == report.overall.total

    def test_three_gold_one_disjoint(self, rules):
        dataset = make_dataset({"who": 4})
        golds = gold_map(dataset)
        ids = list(golds)
        b_answers = dict(golds)
        b_answers[ids[0]] = "granite bronze"  # disjoint from every gold
        report = pairwise_similarity(
            PredictionSet("a", golds), PredictionSet("b", b_answers), dataset, rules
        )
        assert report.overall.equal_f1 == 3
        assert report.overall.equal_em == 3
        assert report.overall.total == 4
        assert report.equal_em_true_count == 3
        assert report.mean_of_equal_f1s == 1.0

    def test_empty_versus_perfect(self, rules, small_dataset):
        report = pairwise_similarity(
            PredictionSet("a", {}),
            PredictionSet("b", gold_map(small_dataset)),
            small_dataset,
            rules,
        )
        assert report.overall.equal_f1 == 0
        assert report.overall.equal_em == 0
        assert report.overall.total == len(small_dataset)
        assert report.equal_em_true_rate == 0.0

    def test_symmetry(self, rules, small_dataset):
        rng = random.Random(11)
        golds = gold_map(small_dataset)
        a_answers, b_answers = {}, {}
        for qid, gold in golds.items():
            a_answers[qid] = rng.choice([gold, "granite bronze", gold.split()[0]])
            b_answers[qid] = rng.choice([gold, "granite bronze", gold.split()[0]])
        ab = pairwise_similarity(
            PredictionSet("a", a_answers), PredictionSet("b", b_answers), small_dataset, rules
        )
        ba = pairwise_similarity(
            PredictionSet("b", b_answers), PredictionSet("a", a_answers), small_dataset, rules
        )
        assert ab.per_class == ba.per_class
        assert ab.overall == ba.overall
        assert ab.mean_of_equal_f1s == ba.mean_of_equal_f1s
        assert ab.equal_em_true_count == ba.equal_em_true_count

    def test_exclude_policy_shrinks_totals(self, rules, small_dataset):
        golds = gold_map(small_dataset)
        half = dict(list(golds.items())[::2])
        report = pairwise_similarity(
            PredictionSet("a", half),
            PredictionSet("b", golds),
            small_dataset,
            rules,
            missing_policy=MissingPolicy.EXCLUDE,
        )
        assert report.overall.total == len(half)
        assert report.overall.equal_f1 == len(half)

    def test_overall_is_per_class_sum(self, rules, small_dataset):
        golds = gold_map(small_dataset)
        report = pairwise_similarity(
            PredictionSet("a", golds), PredictionSet("b", golds), small_dataset, rules
        )
        assert report.overall.equal_f1 == sum(t.equal_f1 for t in report.per_class.values())
        assert report.overall.equal_em == sum(t.equal_em for t in report.per_class.values())
        assert report.overall.total == sum(t.total for t in report.per_class.values())


class TestExports:
    def similarity_report(self, rules, dataset):
        golds = gold_map(dataset)
        return pairwise_similarity(
            PredictionSet("a", golds), PredictionSet("b", golds), dataset, rules
        )

    def test_single_class_csv(self, rules):
        dataset = make_dataset({"why": 3})
        csv_text = similarity_csv(self.similarity_report(rules, dataset))
        lines = csv_text.strip().splitlines()
        assert lines[0] == "class,equal_f1,equal_em,total"
        assert len(lines) == 3  # header + why + SUM
        assert lines[1].split(",")[0] == "why"
        assert lines[2].startswith("SUM,")
        # SUM equals the single class row apart from the label
        assert lines[1].split(",")[1:] == lines[2].split(",")[1:]

    def test_full_class_csv_shape_and_sums(self, rules, small_dataset):
        report = self.similarity_report(rules, small_dataset)
        lines = similarity_csv(report).strip().splitlines()
        assert len(lines) == 1 + 14 + 1
        # count-with-percentage cells: "4 (100.0%)"
        cell = lines[1].split(",")[1]
        assert "(" in cell and cell.endswith("%)")
        sum_row = lines[-1].split(",")
        assert sum_row[0] == "SUM"
        assert sum_row[3] == str(len(small_dataset))

    def test_export_breakdown_dispatch(self, rules, small_dataset):
        report = self.similarity_report(rules, small_dataset)
        assert export_breakdown(report) == similarity_csv(report)
        eval_report = evaluate(
            PredictionSet("m", gold_map(small_dataset)), small_dataset, rules
        )
        assert export_breakdown(eval_report) == eval_breakdown_csv([eval_report])
        assert export_breakdown([eval_report]) == eval_breakdown_csv([eval_report])

    def test_eval_breakdown_csv(self, rules, small_dataset):
        golds = gold_map(small_dataset)
        r1 = evaluate(PredictionSet("m1", golds), small_dataset, rules)
        bad = {qid: "granite" for qid in golds}
        r2 = evaluate(PredictionSet("m2", bad), small_dataset, rules)
        lines = eval_breakdown_csv([r1, r2]).strip().splitlines()
        assert lines[0] == "class,count,m1_f1,m1_em,m2_f1,m2_em"
        assert len(lines) == 1 + 14 + 1
        sum_row = lines[-1].split(",")
        assert sum_row[:2] == ["SUM", str(len(small_dataset))]
        assert sum_row[2] == "100.00" and sum_row[4] == "0.00"

    def test_eval_breakdown_rejects_mismatched_counts(self, rules, small_dataset):
        golds = gold_map(small_dataset)
        r1 = evaluate(PredictionSet("m1", golds), small_dataset, rules)
        half = dict(list(golds.items())[::2])
        r2 = evaluate(
            PredictionSet("m2", half), small_dataset, rules, MissingPolicy.EXCLUDE
        )
        with pytest.raises(ValueError, match="disagree"):
            eval_breakdown_csv([r1, r2])

    def test_json_mirror(self, rules, small_dataset):
        report = self.similarity_report(rules, small_dataset)
        blob = json.loads(json.dumps(report.to_json_dict()))
        assert blob["model_a"] == "a" and blob["model_b"] == "b"
        assert blob["overall"]["total"] == len(small_dataset)
        assert len(blob["per_class"]) == 14
