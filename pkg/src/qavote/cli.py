"""Command-line surface: ingest -> classify -> split -> weights -> ensemble -> evaluate -> compare.

Every artifact-producing command writes a run manifest next to its primary
output recording inputs, configuration, seeds, tool version, output paths,
and wall-clock duration, so any run can be reproduced exactly.

Exit codes: 0 success, 2 usage, 3 missing input file, 4 schema or
validation error, 1 anything else.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import asdict, dataclass
from itertools import combinations
from pathlib import Path

from . import __version__
from .analysis import pairwise_similarity, save_similarity_json, similarity_csv, eval_breakdown_csv
from .corpus import (
    Granularity,
    SchemaError,
    load_dataset,
    load_predictions,
    save_dataset,
    save_predictions,
    save_split_manifest,
    split_pre_eval,
)
from .metrics import MissingPolicy, evaluate, save_report_csv, save_report_json
from .synth import AccuracyProfile, Corruption, generate_predictions, load_profile
from .taxonomy import (
    ClassRuleSet,
    LengthClassifier,
    RuleError,
    class_distribution,
    default_rules,
    load_rules,
)
from .voting import Combine, Equality, VoteConfig, VoteError, VoteMode, run_ensemble, save_traces
from .weighting import (
    MetricBasis,
    WeightError,
    compute_class_weights,
    compute_global_weights,
    load_weights,
    save_weights,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_MISSING_INPUT = 3
EXIT_SCHEMA = 4
EXIT_OTHER = 1

RULES_ENV_VAR = "QAVOTE_RULES"


@dataclass
class RunManifest:
    command: str
    inputs: dict
    config: dict
    seeds: dict
    outputs: list
    duration_seconds: float
    tool_version: str = __version__


def _write_manifest(primary_output: Path, manifest: RunManifest) -> Path:
    path = Path(f"{primary_output}.manifest.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(asdict(manifest), fh, ensure_ascii=False, indent=1)
        fh.write("\n")
    return path


def _parse_preds(pairs: list[str]) -> dict[str, Path]:
    """--preds name=path pairs, in command-line order."""
    out: dict[str, Path] = {}
    for pair in pairs:
        name, sep, path = pair.partition("=")
        if not sep or not name or not path:
            raise ValueError(f"--preds expects NAME=PATH, got {pair!r}")
        if name in out:
            raise ValueError(f"duplicate model name in --preds: {name!r}")
        out[name] = Path(path)
    return out


def _classifier_from_args(args):
    if getattr(args, "length_buckets", None):
        edges = [int(x) for x in args.length_buckets.split(",") if x.strip()]
        return LengthClassifier(edges), {"length_buckets": edges}
    rules_path = getattr(args, "rules", None) or os.environ.get(RULES_ENV_VAR)
    if rules_path:
        return load_rules(rules_path), {"rules": str(rules_path)}
    return default_rules(), {"rules": "<default>"}


def _add_classifier_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--rules", help=f"rule file (default: ${RULES_ENV_VAR} or built-in)")
    parser.add_argument(
        "--length-buckets",
        help="comma-separated word-count edges; classify by question length instead of rules",
    )


def _threads_flag(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--threads", type=int, default=os.cpu_count() or 1,
        help="worker threads for scoring (results are thread-count independent)",
    )


def cmd_rules_show(args) -> int:
    classifier, _ = _classifier_from_args(args)
    if not isinstance(classifier, ClassRuleSet):
        print("error: 'rules show' needs a rule-based classifier", file=sys.stderr)
        return EXIT_USAGE
    if args.json:
        print(json.dumps(classifier.to_json(), indent=1))
    else:
        print(f"{'priority':>8}  {'class':<14} pattern")
        for rule in classifier.rules:
            print(f"{rule.priority:>8}  {rule.question_class.value:<14} {rule.pattern}")
    return EXIT_OK


def cmd_classify_stats(args) -> int:
    start = time.monotonic()
    classifier, classifier_cfg = _classifier_from_args(args)
    dataset = load_dataset(args.dataset)
    hist = class_distribution(dataset, classifier)
    rows = [(label, count) for label, count in hist.counts.items()]
    print(f"{'class':<16} {'count':>8} {'share':>7}")
    for label, count in rows:
        print(f"{label:<16} {count:>8} {100 * hist.share(label):>6.1f}%")
    print(f"{'SUM':<16} {hist.total:>8} {100.0 if hist.total else 0.0:>6.1f}%")

    outputs = []
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write("class,count,percentage\n")
            for label, count in rows:
                fh.write(f"{label},{count},{100 * hist.share(label):.1f}\n")
            fh.write(f"SUM,{hist.total},{100.0 if hist.total else 0.0:.1f}\n")
        outputs.append(str(args.csv))
    if args.json_out:
        with open(args.json_out, "w", encoding="utf-8") as fh:
            json.dump({"counts": hist.counts, "total": hist.total}, fh, indent=1)
            fh.write("\n")
        outputs.append(str(args.json_out))
    if outputs:
        _write_manifest(
            Path(outputs[0]),
            RunManifest(
                command="classify-stats",
                inputs={"dataset": str(args.dataset)},
                config=classifier_cfg,
                seeds={},
                outputs=outputs,
                duration_seconds=time.monotonic() - start,
            ),
        )
    return EXIT_OK


def cmd_split(args) -> int:
    start = time.monotonic()
    dataset = load_dataset(args.dataset)
    split = split_pre_eval(dataset, args.fraction, args.seed, args.granularity)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    train_path = out_dir / "train.json"
    pre_eval_path = out_dir / "pre_eval.json"
    manifest_path = out_dir / "split_manifest.json"
    save_dataset(split.train, train_path)
    save_dataset(split.pre_eval, pre_eval_path)
    save_split_manifest(split, manifest_path)
    print(
        f"split {len(dataset)} questions -> train {len(split.train)}, "
        f"pre_eval {len(split.pre_eval)} (fraction {args.fraction}, seed {args.seed}, "
        f"{split.granularity} granularity)"
    )
    _write_manifest(
        out_dir / "split",
        RunManifest(
            command="split",
            inputs={"dataset": str(args.dataset)},
            config={"fraction": args.fraction, "granularity": str(split.granularity)},
            seeds={"split": args.seed},
            outputs=[str(train_path), str(pre_eval_path), str(manifest_path)],
            duration_seconds=time.monotonic() - start,
        ),
    )
    return EXIT_OK


def cmd_evaluate(args) -> int:
    start = time.monotonic()
    classifier, classifier_cfg = _classifier_from_args(args)
    dataset = load_dataset(args.dataset)
    policy = MissingPolicy(args.missing_policy.replace("-", "_"))
    pred_paths = _parse_preds(args.preds)
    reports = {}
    for name, path in pred_paths.items():
        preds = load_predictions(path, name)
        report = evaluate(preds, dataset, classifier, policy, threads=args.threads)
        reports[name] = report
        print(
            f"{name}: F1={100 * report.overall.mean_f1:.2f}% "
            f"EM={100 * report.overall.em_rate:.2f}% (n={report.overall.count})"
        )
    outputs = []
    if args.json_out:
        if len(reports) == 1:
            save_report_json(next(iter(reports.values())), args.json_out)
        else:
            with open(args.json_out, "w", encoding="utf-8") as fh:
                json.dump(
                    {name: r.to_json_dict() for name, r in reports.items()}, fh, indent=1
                )
                fh.write("\n")
        outputs.append(str(args.json_out))
    if args.csv:
        if len(reports) == 1:
            save_report_csv(next(iter(reports.values())), args.csv)
        else:
            with open(args.csv, "w", encoding="utf-8") as fh:
                fh.write(eval_breakdown_csv(list(reports.values())))
        outputs.append(str(args.csv))
    if outputs:
        _write_manifest(
            Path(outputs[0]),
            RunManifest(
                command="evaluate",
                inputs={"dataset": str(args.dataset), **{n: str(p) for n, p in pred_paths.items()}},
                config={**classifier_cfg, "missing_policy": policy.value},
                seeds={},
                outputs=outputs,
                duration_seconds=time.monotonic() - start,
            ),
        )
    return EXIT_OK


_BASIS_BY_FLAG = {"f1": MetricBasis.MEAN_F1, "em": MetricBasis.EM_RATE}


def cmd_weights(args) -> int:
    start = time.monotonic()
    classifier, classifier_cfg = _classifier_from_args(args)
    dataset = load_dataset(args.pre_eval)
    policy = MissingPolicy(args.missing_policy.replace("-", "_"))
    pred_paths = _parse_preds(args.preds)
    reports = {
        name: evaluate(load_predictions(path, name), dataset, classifier, policy,
                       threads=args.threads)
        for name, path in pred_paths.items()
    }
    basis = _BASIS_BY_FLAG[args.basis]
    labels = getattr(classifier, "labels", ())
    if args.no_classes:
        table = compute_global_weights(reports, basis, labels)
    else:
        table = compute_class_weights(reports, basis, labels)
    save_weights(table, args.out)
    for model in table.models:
        marker = " (best overall)" if model == table.best_overall else ""
        print(f"{model}: global weight {table.global_weights[model]:.4f}{marker}")
    _write_manifest(
        Path(args.out),
        RunManifest(
            command="weights",
            inputs={"pre_eval": str(args.pre_eval), **{n: str(p) for n, p in pred_paths.items()}},
            config={
                **classifier_cfg,
                "basis": basis.value,
                "no_classes": bool(args.no_classes),
                "missing_policy": policy.value,
            },
            seeds={},
            outputs=[str(args.out)],
            duration_seconds=time.monotonic() - start,
        ),
    )
    return EXIT_OK


def cmd_ensemble(args) -> int:
    start = time.monotonic()
    classifier, classifier_cfg = _classifier_from_args(args)
    dataset = load_dataset(args.dataset)
    table = load_weights(args.weights)
    pred_paths = _parse_preds(args.preds)
    predictions = {name: load_predictions(path, name) for name, path in pred_paths.items()}
    config = VoteConfig(
        mode=VoteMode(args.mode.replace("-", "_")),
        combine=Combine(args.combine),
        undefined_special_case=not args.no_undefined_special_case,
        duplicate_equality=Equality(args.equality),
    )
    ensemble, traces = run_ensemble(dataset, predictions, table, classifier, config)
    save_predictions(ensemble, args.out)
    outputs = [str(args.out)]
    if args.trace:
        save_traces(traces, args.trace)
        outputs.append(str(args.trace))
    print(f"ensemble answers for {len(ensemble)} questions -> {args.out}")
    _write_manifest(
        Path(args.out),
        RunManifest(
            command="ensemble",
            inputs={
                "dataset": str(args.dataset),
                "weights": str(args.weights),
                **{n: str(p) for n, p in pred_paths.items()},
            },
            config={
                **classifier_cfg,
                "mode": config.mode.value,
                "combine": config.combine.value,
                "undefined_special_case": config.undefined_special_case,
                "duplicate_equality": config.duplicate_equality.value,
            },
            seeds={},
            outputs=outputs,
            duration_seconds=time.monotonic() - start,
        ),
    )
    return EXIT_OK


def cmd_compare(args) -> int:
    start = time.monotonic()
    classifier, classifier_cfg = _classifier_from_args(args)
    dataset = load_dataset(args.dataset)
    policy = MissingPolicy(args.missing_policy.replace("-", "_"))
    pred_paths = _parse_preds(args.preds)
    if len(pred_paths) < 2:
        raise ValueError("compare needs at least two --preds")
    loaded = {name: load_predictions(path, name) for name, path in pred_paths.items()}
    pairs = list(combinations(loaded, 2))
    if (args.csv or args.json_out) and len(pairs) > 1:
        raise ValueError("--csv/--json fit one pair; use --out-dir for more models")
    outputs = []
    for name_a, name_b in pairs:
        report = pairwise_similarity(loaded[name_a], loaded[name_b], dataset, classifier, policy)
        o = report.overall
        print(
            f"{name_a} vs {name_b}: equal F1 {o.equal_f1}/{o.total}, "
            f"equal EM {o.equal_em}/{o.total}, mean equal F1 "
            f"{100 * report.mean_of_equal_f1s:.1f}%, EM true among equal "
            f"{report.equal_em_true_count} ({100 * report.equal_em_true_rate:.1f}%)"
        )
        targets = []
        if args.out_dir:
            out_dir = Path(args.out_dir)
            out_dir.mkdir(parents=True, exist_ok=True)
            targets = [
                (out_dir / f"{name_a}_vs_{name_b}.csv", "csv"),
                (out_dir / f"{name_a}_vs_{name_b}.json", "json"),
            ]
        if args.csv:
            targets.append((Path(args.csv), "csv"))
        if args.json_out:
            targets.append((Path(args.json_out), "json"))
        for path, kind in targets:
            if kind == "csv":
                with open(path, "w", encoding="utf-8") as fh:
                    fh.write(similarity_csv(report))
            else:
                save_similarity_json(report, path)
            outputs.append(str(path))
    if outputs:
        _write_manifest(
            Path(outputs[0]),
            RunManifest(
                command="compare",
                inputs={"dataset": str(args.dataset), **{n: str(p) for n, p in pred_paths.items()}},
                config={**classifier_cfg, "missing_policy": policy.value},
                seeds={},
                outputs=outputs,
                duration_seconds=time.monotonic() - start,
            ),
        )
    return EXIT_OK


def cmd_synth(args) -> int:
    start = time.monotonic()
    classifier, classifier_cfg = _classifier_from_args(args)
    dataset = load_dataset(args.dataset)
    if args.profile:
        profile = load_profile(args.profile)
    else:
        labels = getattr(classifier, "labels", ())
        profile = AccuracyProfile(
            per_class={label: args.prob_all for label in labels},
            corruption=Corruption(args.corruption),
            seed=args.seed,
        )
    preds = generate_predictions(dataset, profile, args.name, classifier)
    save_predictions(preds, args.out)
    note = ""
    if preds.meta.get("sentinel_fallback_ids"):
        note = f" ({len(preds.meta['sentinel_fallback_ids'])} sentinel fallbacks)"
    print(f"generated {len(preds)} synthetic answers as {args.name!r} -> {args.out}{note}")
    _write_manifest(
        Path(args.out),
        RunManifest(
            command="synth",
            inputs={"dataset": str(args.dataset), "profile": str(args.profile or "<inline>")},
            config={**classifier_cfg, "corruption": profile.corruption.value,
                    "model_name": args.name},
            seeds={"profile": profile.seed},
            outputs=[str(args.out)],
            duration_seconds=time.monotonic() - start,
        ),
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qavote",
        description="Class-aware weighted-voting ensemble over extractive-QA prediction files.",
    )
    parser.add_argument("--version", action="version", version=f"qavote {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_rules = sub.add_parser("rules", help="inspect classification rules")
    rules_sub = p_rules.add_subparsers(dest="rules_command", required=True)
    p_rules_show = rules_sub.add_parser("show", help="print the effective rule set")
    _add_classifier_flags(p_rules_show)
    p_rules_show.add_argument("--json", action="store_true", help="emit JSON instead of a table")
    p_rules_show.set_defaults(func=cmd_rules_show)

    p_stats = sub.add_parser("classify-stats", help="question-class histogram of a dataset")
    p_stats.add_argument("--dataset", required=True)
    _add_classifier_flags(p_stats)
    p_stats.add_argument("--csv", help="write the histogram as CSV")
    p_stats.add_argument("--json", dest="json_out", help="write the histogram as JSON")
    p_stats.set_defaults(func=cmd_classify_stats)

    p_split = sub.add_parser("split", help="deterministic train / pre-evaluation split")
    p_split.add_argument("--dataset", required=True)
    p_split.add_argument("--fraction", type=float, required=True)
    p_split.add_argument("--seed", type=int, required=True)
    p_split.add_argument(
        "--granularity",
        choices=[g.value for g in Granularity],
        default=Granularity.QUESTION.value,
    )
    p_split.add_argument("--out-dir", required=True)
    p_split.set_defaults(func=cmd_split)

    p_eval = sub.add_parser("evaluate", help="score prediction files against a dataset")
    p_eval.add_argument("--dataset", required=True)
    p_eval.add_argument("--preds", action="append", required=True, metavar="NAME=PATH")
    _add_classifier_flags(p_eval)
    p_eval.add_argument(
        "--missing-policy", default="score-as-empty", choices=["score-as-empty", "exclude"]
    )
    p_eval.add_argument("--json", dest="json_out", help="write the full report(s) as JSON")
    p_eval.add_argument("--csv", help="write the per-class breakdown as CSV")
    _threads_flag(p_eval)
    p_eval.set_defaults(func=cmd_evaluate)

    p_weights = sub.add_parser("weights", help="voting weights from a pre-evaluation dataset")
    p_weights.add_argument("--pre-eval", required=True)
    p_weights.add_argument("--preds", action="append", required=True, metavar="NAME=PATH")
    _add_classifier_flags(p_weights)
    p_weights.add_argument("--basis", choices=["f1", "em"], default="f1")
    p_weights.add_argument(
        "--no-classes", action="store_true", help="single global weight per model"
    )
    p_weights.add_argument(
        "--missing-policy", default="score-as-empty", choices=["score-as-empty", "exclude"]
    )
    p_weights.add_argument("--out", required=True)
    _threads_flag(p_weights)
    p_weights.set_defaults(func=cmd_weights)

    p_ens = sub.add_parser("ensemble", help="weighted-voting ensemble over prediction files")
    p_ens.add_argument("--dataset", required=True)
    p_ens.add_argument("--preds", action="append", required=True, metavar="NAME=PATH")
    p_ens.add_argument("--weights", required=True)
    _add_classifier_flags(p_ens)
    p_ens.add_argument("--mode", choices=["class-aware", "global"], default="class-aware")
    p_ens.add_argument("--combine", choices=["sum", "max"], default="sum")
    p_ens.add_argument(
        "--no-undefined-special-case",
        action="store_true",
        help="vote undefined-class questions like any other class",
    )
    p_ens.add_argument("--equality", choices=["normalized", "raw"], default="normalized")
    p_ens.add_argument("--out", required=True)
    p_ens.add_argument("--trace", help="write one JSON vote trace per question")
    p_ens.set_defaults(func=cmd_ensemble)

    p_cmp = sub.add_parser("compare", help="pairwise prediction-similarity statistics")
    p_cmp.add_argument("--dataset", required=True)
    p_cmp.add_argument("--preds", action="append", required=True, metavar="NAME=PATH")
    _add_classifier_flags(p_cmp)
    p_cmp.add_argument(
        "--missing-policy", default="score-as-empty", choices=["score-as-empty", "exclude"]
    )
    p_cmp.add_argument("--csv", help="write the per-class table (single pair only)")
    p_cmp.add_argument("--json", dest="json_out", help="write the report JSON (single pair only)")
    p_cmp.add_argument("--out-dir", help="write per-pair CSV+JSON files here")
    p_cmp.set_defaults(func=cmd_compare)

    p_synth = sub.add_parser("synth", help="generate synthetic prediction files")
    p_synth.add_argument("--dataset", required=True)
    p_synth.add_argument("--profile", help="accuracy profile JSON")
    p_synth.add_argument("--prob-all", type=float, default=0.0,
                         help="without --profile: gold probability for every class")
    p_synth.add_argument("--corruption", choices=[c.value for c in Corruption],
                         default=Corruption.DISJOINT_TOKEN.value)
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--name", required=True, help="model name for the output")
    _add_classifier_flags(p_synth)
    p_synth.add_argument("--out", required=True)
    p_synth.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: missing input file: {exc}", file=sys.stderr)
        return EXIT_MISSING_INPUT
    except (SchemaError, RuleError, WeightError, VoteError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except Exception as exc:  # pragma: no cover - safety net
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_OTHER


if __name__ == "__main__":
    sys.exit(main())
