from __future__ import annotations

import json

import pytest

from helpers import make_squad_dict, uniform_counts

from qavote.cli import main
from qavote.taxonomy import CLASS_LABELS


@pytest.fixture()
def corpus_file(tmp_path):
    data = make_squad_dict(uniform_counts(6))
    path = tmp_path / "corpus.json"
    path.write_text(json.dumps(data), encoding="utf-8")
    return path


def write_profile(tmp_path, name, per_class, seed):
    path = tmp_path / f"{name}_profile.json"
    path.write_text(
        json.dumps({"per_class": per_class, "corruption": "disjoint_token", "seed": seed}),
        encoding="utf-8",
    )
    return path


def synth_model(tmp_path, corpus_file, name, classes, seed):
    profile = write_profile(tmp_path, name, {c: 1.0 for c in classes}, seed)
    out = tmp_path / f"{name}.json"
    rc = main(
        [
            "synth",
            "--dataset", str(corpus_file),
            "--profile", str(profile),
            "--name", name,
            "--out", str(out),
        ]
    )
    assert rc == 0
    return out


class TestPipeline:
    def test_full_pipeline(self, tmp_path, corpus_file, capsys):
        m1 = synth_model(tmp_path, corpus_file, "m1", ["when", "who", "why"], seed=1)
        m2 = synth_model(tmp_path, corpus_file, "m2", ["what", "where"], seed=2)
        rest = [
            c for c in CLASS_LABELS if c not in {"when", "who", "why", "what", "where"}
        ]
        m3 = synth_model(tmp_path, corpus_file, "m3", rest, seed=3)

        split_dir = tmp_path / "split"
        rc = main(
            [
                "split",
                "--dataset", str(corpus_file),
                "--fraction", "0.25",
                "--seed", "7",
                "--out-dir", str(split_dir),
            ]
        )
        assert rc == 0
        assert (split_dir / "train.json").exists()
        assert (split_dir / "pre_eval.json").exists()
        manifest = json.loads((split_dir / "split_manifest.json").read_text())
        assert manifest["seed"] == 7 and manifest["granularity"] == "question"

        weights_path = tmp_path / "weights.json"
        rc = main(
            [
                "weights",
                "--pre-eval", str(split_dir / "pre_eval.json"),
                "--preds", f"m1={m1}",
                "--preds", f"m2={m2}",
                "--preds", f"m3={m3}",
                "--basis", "f1",
                "--out", str(weights_path),
            ]
        )
        assert rc == 0
        table = json.loads(weights_path.read_text())
        assert set(table) == {"models", "metric_basis", "global", "classes", "best_overall"}
        assert table["models"] == ["m1", "m2", "m3"]
        weights_manifest = json.loads((tmp_path / "weights.json.manifest.json").read_text())
        assert weights_manifest["command"] == "weights"
        assert weights_manifest["config"]["basis"] == "mean_f1"

        ensemble_path = tmp_path / "ensemble.json"
        trace_path = tmp_path / "trace.jsonl"
        rc = main(
            [
                "ensemble",
                "--dataset", str(split_dir / "train.json"),
                "--preds", f"m1={m1}",
                "--preds", f"m2={m2}",
                "--preds", f"m3={m3}",
                "--weights", str(weights_path),
                "--mode", "class-aware",
                "--combine", "sum",
                "--out", str(ensemble_path),
                "--trace", str(trace_path),
            ]
        )
        assert rc == 0
        ensemble = json.loads(ensemble_path.read_text())
        train = json.loads((split_dir / "train.json").read_text())
        train_ids = [
            qa["id"]
            for article in train["data"]
            for paragraph in article["paragraphs"]
            for qa in paragraph["qas"]
        ]
        assert set(ensemble) == set(train_ids)
        assert len(trace_path.read_text().strip().splitlines()) == len(train_ids)
        ensemble_manifest = json.loads((tmp_path / "ensemble.json.manifest.json").read_text())
        assert ensemble_manifest["outputs"] == [str(ensemble_path), str(trace_path)]
        assert (split_dir / "split.manifest.json").exists()

        capsys.readouterr()
        rc = main(
            [
                "evaluate",
                "--dataset", str(split_dir / "train.json"),
                "--preds", f"ensemble={ensemble_path}",
                "--preds", f"m1={m1}",
                "--csv", str(tmp_path / "eval.csv"),
                "--json", str(tmp_path / "eval.json"),
            ]
        )
        assert rc == 0
        out = capsys.readouterr().out
        assert "ensemble: F1=" in out and "m1: F1=" in out
        header = (tmp_path / "eval.csv").read_text().splitlines()[0]
        assert header == "class,count,ensemble_f1,ensemble_em,m1_f1,m1_em"

        rc = main(
            [
                "compare",
                "--dataset", str(corpus_file),
                "--preds", f"m1={m1}",
                "--preds", f"m2={m2}",
                "--csv", str(tmp_path / "sim.csv"),
                "--json", str(tmp_path / "sim.json"),
            ]
        )
        assert rc == 0
        sim = json.loads((tmp_path / "sim.json").read_text())
        assert sim["model_a"] == "m1" and sim["model_b"] == "m2"
        assert (tmp_path / "sim.csv").read_text().startswith("class,equal_f1,equal_em,total")

    def test_split_reruns_are_byte_identical(self, tmp_path, corpus_file):
        args = [
            "split",
            "--dataset", str(corpus_file),
            "--fraction", "0.2",
            "--seed", "13",
        ]
        dir_a, dir_b = tmp_path / "a", tmp_path / "b"
        assert main(args + ["--out-dir", str(dir_a)]) == 0
        assert main(args + ["--out-dir", str(dir_b)]) == 0
        for name in ("train.json", "pre_eval.json", "split_manifest.json"):
            assert (dir_a / name).read_bytes() == (dir_b / name).read_bytes()

    def test_manifests_written_alongside_outputs(self, tmp_path, corpus_file):
        out = synth_model(tmp_path, corpus_file, "m1", ["what"], seed=1)
        manifest_path = tmp_path / "m1.json.manifest.json"
        assert manifest_path.exists()
        manifest = json.loads(manifest_path.read_text())
        assert manifest["command"] == "synth"
        assert manifest["tool_version"]
        assert manifest["outputs"] == [str(out)]
        assert manifest["seeds"] == {"profile": 1}
        assert manifest["duration_seconds"] >= 0

    def test_classify_stats(self, tmp_path, corpus_file, capsys):
        csv_path = tmp_path / "stats.csv"
        json_path = tmp_path / "stats.json"
        rc = main(
            [
                "classify-stats",
                "--dataset", str(corpus_file),
                "--csv", str(csv_path),
                "--json", str(json_path),
            ]
        )
        assert rc == 0
        out = capsys.readouterr().out
        assert "SUM" in out
        stats = json.loads(json_path.read_text())
        assert stats["total"] == 84
        assert sum(stats["counts"].values()) == 84
        lines = csv_path.read_text().strip().splitlines()
        assert lines[0] == "class,count,percentage"
        assert lines[-1].startswith("SUM,84,")

    def test_classify_stats_length_buckets(self, tmp_path, corpus_file, capsys):
        rc = main(
            [
                "classify-stats",
                "--dataset", str(corpus_file),
                "--length-buckets", "6,9",
            ]
        )
        assert rc == 0
        assert "len_0" in capsys.readouterr().out

    def test_rules_show(self, capsys):
        assert main(["rules", "show"]) == 0
        out = capsys.readouterr().out
        assert "what_time" in out and "priority" in out
        assert main(["rules", "show", "--json"]) == 0
        rules = json.loads(capsys.readouterr().out)
        assert all({"pattern", "class", "priority"} <= set(r) for r in rules)

    def test_rules_env_override(self, tmp_path, corpus_file, monkeypatch, capsys):
        custom = [{"pattern": r"\bwho\b", "class": "who", "priority": 1}]
        rules_path = tmp_path / "rules.json"
        rules_path.write_text(json.dumps(custom), encoding="utf-8")
        monkeypatch.setenv("QAVOTE_RULES", str(rules_path))
        rc = main(["classify-stats", "--dataset", str(corpus_file)])
        assert rc == 0
        out = capsys.readouterr().out
        # only "who" questions match; everything else is undefined
        assert any(line.startswith("who") and " 6 " in line for line in out.splitlines())


class TestErrorCodes:
    def test_missing_input_file(self, tmp_path, capsys):
        rc = main(["classify-stats", "--dataset", str(tmp_path / "nope.json")])
        assert rc == 3
        assert "missing input file" in capsys.readouterr().err

    def test_schema_violation(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{broken", encoding="utf-8")
        rc = main(["classify-stats", "--dataset", str(bad)])
        assert rc == 4
        assert "error" in capsys.readouterr().err

    def test_usage_error_exits_two(self):
        with pytest.raises(SystemExit) as excinfo:
            main(["classify-stats", "--no-such-flag"])
        assert excinfo.value.code == 2

    def test_bad_preds_argument(self, tmp_path, corpus_file, capsys):
        rc = main(
            [
                "evaluate",
                "--dataset", str(corpus_file),
                "--preds", "missing-equals-sign",
            ]
        )
        assert rc == 4
        assert "NAME=PATH" in capsys.readouterr().err

    def test_compare_needs_two_models(self, tmp_path, corpus_file, capsys):
        preds = tmp_path / "p.json"
        preds.write_text("{}", encoding="utf-8")
        rc = main(
            ["compare", "--dataset", str(corpus_file), "--preds", f"a={preds}"]
        )
        assert rc == 4
