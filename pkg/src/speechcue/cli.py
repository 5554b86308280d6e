"""Command-line pipeline: each subcommand reads upstream files and writes its own."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from speechcue import baseline, metrics
from speechcue.corpus import MANIFEST_KEYS, Manifest, Utterance, load_manifest, resolve_label_set
from speechcue.describe import DEFAULT_HEDGE_MARGIN, Annotation, CategorizedFeatures
from speechcue.dsp import DSPConfig, ProsodicFeatures, decode_wav, extract_features
from speechcue.errors import MissingInput, SpeechCueError
from speechcue.inference import EndpointConfig, classify_zero_shot, export_finetune_records
from speechcue.jsonl import (
    ANNOTATIONS,
    FEATURES,
    PREDICTIONS,
    PROMPTS,
    REPORT,
    THRESHOLDS,
    iter_jsonl,
    read_document,
    read_stage,
    tag,
    write_document,
    write_jsonl,
)
from speechcue.prompt import MODES, PromptConfig, build_prompt, prompt_record
from speechcue.thresholds import (
    NormalizationPolicy,
    QuantileScheme,
    Standardizer,
    ThresholdTable,
    build_threshold_table,
    feature_values,
)

log = logging.getLogger("speechcue")

GROUPINGS = {"global": "global", "speaker": "per_speaker", "group": "per_group"}


# ---------------------------------------------------------------- stage functions


def _features_by_id(path: str | Path) -> dict[str, ProsodicFeatures]:
    return {
        rec["utterance_id"]: ProsodicFeatures.from_record(rec)
        for rec in read_stage(path, FEATURES)
    }


def run_extract(
    manifest: Manifest,
    audio_root: str | Path,
    out: str | Path,
    config: DSPConfig | None = None,
    jobs: int = 1,
) -> int:
    cfg = config or DSPConfig()
    root = Path(audio_root)
    todo = [u for u in manifest.utterances if u.audio_path]
    for u in manifest.utterances:
        if not u.audio_path:
            log.warning("%s has no audio; skipped", u.utterance_id)

    def one(utt: Utterance) -> dict:
        path = root / utt.audio_path
        if not path.exists():
            raise MissingInput(f"audio for {utt.utterance_id} not found at {path}")
        feats = extract_features(decode_wav(path), utt.transcript, cfg)
        return {"schema": tag(FEATURES), "utterance_id": utt.utterance_id, **feats.to_record()}

    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        records = list(pool.map(one, todo))
    return write_jsonl(out, records)


def run_thresholds(
    manifest: Manifest,
    features_path: str | Path,
    out: str | Path,
    num_classes: int = 5,
    grouping: str = "per_speaker",
    min_count: int = 24,
    standardize: str | None = None,
) -> ThresholdTable:
    """Optionally z-score within ``standardize`` groups, then build quantile thresholds."""
    feats = _features_by_id(features_path)
    values = {uid: feature_values(f) for uid, f in feats.items()}
    standardizer = None
    if standardize:
        standardizer = Standardizer.fit(values, manifest, NormalizationPolicy(standardize, min_count))
        values = standardizer.transform(values, manifest)
    table = build_threshold_table(
        values,
        manifest,
        QuantileScheme.for_classes(num_classes),
        NormalizationPolicy(grouping, min_count),
        standardizer,
    )
    write_document(out, table.to_dict())
    return table


def categorize_all(
    manifest: Manifest, feats: dict[str, ProsodicFeatures], table: ThresholdTable
) -> dict[str, CategorizedFeatures]:
    return {
        uid: CategorizedFeatures.from_mapping(table.categorize_utterance(manifest.get(uid), pf))
        for uid, pf in feats.items()
    }


def run_describe(
    manifest: Manifest,
    features_path: str | Path,
    thresholds_path: str | Path,
    out: str | Path,
    hedge_margin: float = DEFAULT_HEDGE_MARGIN,
) -> int:
    table = ThresholdTable.from_dict(read_document(thresholds_path, THRESHOLDS))
    cats = categorize_all(manifest, _features_by_id(features_path), table)
    records = [
        Annotation.build(uid, table.scheme.num_classes, cf, hedge_margin).to_record()
        for uid, cf in cats.items()
    ]
    return write_jsonl(out, records)


def load_annotations(path: str | Path) -> dict[str, Annotation]:
    return {rec["utterance_id"]: Annotation.from_record(rec) for rec in read_stage(path, ANNOTATIONS)}


def run_prompt(
    manifest: Manifest, annotations_path: str | Path, out: str | Path, config: PromptConfig
) -> int:
    annotations = load_annotations(annotations_path) if annotations_path else {}
    records = [
        prompt_record(
            manifest,
            u.utterance_id,
            build_prompt(manifest, u.utterance_id, annotations, config),
            config.mode,
        )
        for u in manifest.utterances
    ]
    return write_jsonl(out, records)


def run_classify(
    manifest: Manifest, prompts_path: str | Path, out: str | Path, endpoint: EndpointConfig
) -> int:
    prompts = read_stage(prompts_path, PROMPTS)
    preds = classify_zero_shot(prompts, endpoint, manifest.label_set)
    bad = sum(p.parsed_label is None for p in preds)
    if bad:
        log.warning("%d of %d completions were unparseable", bad, len(preds))
    return write_jsonl(out, (p.to_record() for p in preds))


def run_export(prompts_path: str | Path, out: str | Path) -> int:
    return export_finetune_records(read_stage(prompts_path, PROMPTS), out)


def _is_manifest(path: str | Path) -> bool:
    for _, rec in iter_jsonl(path):
        return "schema" not in rec and set(MANIFEST_KEYS) <= set(rec)
    return False


def run_score(
    manifest: Manifest, pred_path: str | Path, out: str | Path | None = None
) -> metrics.EvalReport:
    """Score a predictions file, or a labelled manifest used as predictions, against gold."""
    if _is_manifest(pred_path):
        preds = {u.utterance_id: u.label for u in load_manifest(pred_path).utterances}
    else:
        preds = {rec["utterance_id"]: rec["parsed_label"] for rec in read_stage(pred_path, PREDICTIONS)}
    gold, predicted = [], []
    for uid, label in preds.items():
        utt = manifest.get(uid)
        if utt.label is None:
            continue
        gold.append(utt.label)
        predicted.append(label)
    report = metrics.score(gold, predicted, manifest.label_set)
    if out:
        write_document(out, report.to_dict())
    return report


def run_eval_ml(
    manifest: Manifest,
    features_path: str | Path,
    thresholds_path: str | Path,
    out: str | Path | None,
    config: baseline.TrainConfig,
    trials: int = 10_000,
) -> dict:
    """Train the MLP on the train split with both encodings; score on the test split."""
    feats = _features_by_id(features_path)
    table = ThresholdTable.from_dict(read_document(thresholds_path, THRESHOLDS))
    k = table.scheme.num_classes
    labelled = [manifest.get(uid) for uid in feats if manifest.get(uid).label]
    train_utts = [u for u in labelled if u.split == "train"]
    test_utts = [u for u in labelled if u.split == "test"]
    if not train_utts or not test_utts:
        raise MissingInput("eval-ml needs labelled utterances in both train and test splits")

    values = {u.utterance_id: feature_values(feats[u.utterance_id]) for u in labelled}
    # numerical features are z-scored with train-split statistics only
    train_ids = {u.utterance_id for u in train_utts}
    scaler = Standardizer.fit(
        {uid: v for uid, v in values.items() if uid in train_ids},
        manifest,
        NormalizationPolicy("global", 2),
    )
    cats = categorize_all(manifest, {u.utterance_id: feats[u.utterance_id] for u in labelled}, table)

    def matrix(utts: list[Utterance], encoding: str) -> np.ndarray:
        if encoding == "numerical":
            rows = [
                baseline.encode_numerical(scaler.transform_one(u, values[u.utterance_id])).values
                for u in utts
            ]
        else:
            rows = [baseline.encode_onehot(cats[u.utterance_id], k).values for u in utts]
        return np.vstack(rows)

    y_train = [u.label for u in train_utts]
    y_test = [u.label for u in test_utts]
    result = {
        "schema": tag(REPORT),
        "num_classes": k,
        "train_size": len(train_utts),
        "test_size": len(test_utts),
    }
    for encoding in ("numerical", "onehot"):
        model = baseline.train(matrix(train_utts, encoding), y_train, config, manifest.label_set)
        pred, _ = baseline.predict(model, matrix(test_utts, encoding))
        rep = metrics.score(y_test, pred, manifest.label_set)
        result[encoding] = {"weighted_f1": round(rep.weighted_f1, 12), "macro_f1": round(rep.macro_f1, 12)}
    counts = Counter(y_test)
    dist = [counts[lab] / len(y_test) for lab in manifest.label_set]
    result["random_weighted_f1"] = round(
        baseline.expected_random_f1(dist, trials, config.seed, n_samples=max(len(y_test), 600)), 12
    )
    if out:
        write_document(out, result)
    return result


# ---------------------------------------------------------------- argument parsing


def _add(p: argparse.ArgumentParser, *flags: str, required: bool = False, **kw) -> None:
    action = p.add_argument(*flags, **kw)
    if required:
        p._speechcue_required.append(action.dest)  # type: ignore[attr-defined]


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file whose keys set flag defaults")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="speechcue", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    subs: dict[str, argparse.ArgumentParser] = {}

    def cmd(name: str, help: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, parents=[common], help=help)
        p._speechcue_required = []  # type: ignore[attr-defined]
        subs[name] = p
        return p

    def manifest_flags(p: argparse.ArgumentParser) -> None:
        _add(p, "--manifest", required=True)
        _add(p, "--labels", help="label set: 'iemocap', 'meld' or a comma list (default: inferred)")

    p = cmd("extract", "compute prosodic features from audio")
    manifest_flags(p)
    _add(p, "--audio-root", default=".")
    _add(p, "--out", required=True)
    _add(p, "--jobs", type=int, default=1)
    _add(p, "--f-min", type=float, default=DSPConfig.f_min)
    _add(p, "--f-max", type=float, default=DSPConfig.f_max)

    p = cmd("thresholds", "build quantile threshold table")
    manifest_flags(p)
    _add(p, "--features", required=True)
    _add(p, "--out", required=True)
    _add(p, "--classes", type=int, default=5, choices=(3, 4, 5, 6))
    _add(p, "--group", default="speaker", choices=sorted(GROUPINGS))
    _add(p, "--min-count", type=int, default=24)
    _add(p, "--standardize", default="none", choices=["none", *sorted(GROUPINGS)])

    p = cmd("describe", "render descriptions and impressions")
    manifest_flags(p)
    _add(p, "--features", required=True)
    _add(p, "--thresholds", required=True)
    _add(p, "--out", required=True)
    _add(p, "--hedge-margin", type=float, default=DEFAULT_HEDGE_MARGIN)

    p = cmd("prompt", "assemble prompts")
    manifest_flags(p)
    _add(p, "--annotations")
    _add(p, "--out", required=True)
    _add(p, "--mode", default="with_description", choices=MODES)
    _add(p, "--context-window", type=int, default=12)
    _add(p, "--context-feature", default="pitch", choices=("none", "pitch", "volume", "all"))
    _add(p, "--context-depth", type=int, default=3)
    _add(p, "--speech-only-source", default="description", choices=("description", "impression"))

    p = cmd("classify", "zero-shot classification through a chat-completion endpoint")
    manifest_flags(p)
    _add(p, "--prompts", required=True)
    _add(p, "--out", required=True)
    _add(p, "--base-url", required=True)
    _add(p, "--model", required=True)
    _add(p, "--jobs", type=int, default=4)
    _add(p, "--timeout", type=float, default=60.0)
    _add(p, "--max-retries", type=int, default=3)
    _add(p, "--temperature", type=float, default=0.0)

    p = cmd("export-finetune", "write prompt/completion pairs for external fine-tuning")
    _add(p, "--prompts", required=True)
    _add(p, "--out", required=True)

    p = cmd("eval-ml", "feature-only MLP baseline, numerical vs one-hot")
    manifest_flags(p)
    _add(p, "--features", required=True)
    _add(p, "--thresholds", required=True)
    _add(p, "--out")
    _add(p, "--epochs", type=int, default=baseline.TrainConfig.epochs)
    _add(p, "--learning-rate", type=float, default=baseline.TrainConfig.learning_rate)
    _add(p, "--batch-size", type=int, default=baseline.TrainConfig.batch_size)
    _add(p, "--l2", type=float, default=baseline.TrainConfig.l2)
    _add(p, "--trials", type=int, default=10_000)

    p = cmd("score", "score predictions against gold labels")
    _add(p, "--pred", required=True)
    _add(p, "--gold", required=True, help="manifest holding the gold labels")
    _add(p, "--labels")
    _add(p, "--out")
    _add(p, "--baseline", help="earlier report to diff against")

    return parser, subs


def _apply_config(argv: list[str], subs: dict[str, argparse.ArgumentParser]) -> None:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    path = Path(known.config)
    if not path.exists():
        raise MissingInput(f"config file {path} does not exist")
    cfg = json.loads(path.read_text(encoding="utf-8"))
    flat = {k.replace("-", "_"): v for k, v in cfg.items() if not isinstance(v, dict)}
    for name, p in subs.items():
        dests = {a.dest for a in p._actions}
        values = {k: v for k, v in flat.items() if k in dests}
        section = cfg.get(name, {})
        values.update({k.replace("-", "_"): v for k, v in section.items()})
        p.set_defaults(**values)


def _manifest(args: argparse.Namespace, key: str = "manifest") -> Manifest:
    return load_manifest(getattr(args, key), resolve_label_set(getattr(args, "labels", None)))


def dispatch(args: argparse.Namespace) -> None:
    c = args.command
    if c == "extract":
        cfg = DSPConfig(f_min=args.f_min, f_max=args.f_max)
        n = run_extract(_manifest(args), args.audio_root, args.out, cfg, args.jobs)
        print(f"wrote {n} feature records to {args.out}")
    elif c == "thresholds":
        std = None if args.standardize == "none" else GROUPINGS[args.standardize]
        table = run_thresholds(
            _manifest(args), args.features, args.out, args.classes,
            GROUPINGS[args.group], args.min_count, std,
        )
        groups = sorted({g for per in table.boundaries.values() for g in per})
        print(f"wrote {args.classes}-class thresholds for groups {groups} to {args.out}")
    elif c == "describe":
        n = run_describe(_manifest(args), args.features, args.thresholds, args.out, args.hedge_margin)
        print(f"wrote {n} annotations to {args.out}")
    elif c == "prompt":
        cfg = PromptConfig(
            mode=args.mode,
            context_window=args.context_window,
            context_feature=args.context_feature,
            context_depth=min(args.context_depth, args.context_window),
            speech_only_source=args.speech_only_source,
        )
        n = run_prompt(_manifest(args), args.annotations, args.out, cfg)
        print(f"wrote {n} prompts to {args.out}")
    elif c == "classify":
        endpoint = EndpointConfig(
            base_url=args.base_url,
            model_name=args.model,
            timeout_s=args.timeout,
            max_retries=args.max_retries,
            max_concurrency=args.jobs,
            temperature=args.temperature,
        )
        n = run_classify(_manifest(args), args.prompts, args.out, endpoint)
        print(f"wrote {n} predictions to {args.out}")
    elif c == "export-finetune":
        n = run_export(args.prompts, args.out)
        print(f"wrote {n} fine-tuning records to {args.out}")
    elif c == "eval-ml":
        cfg = baseline.TrainConfig(
            learning_rate=args.learning_rate,
            epochs=args.epochs,
            batch_size=args.batch_size,
            seed=args.seed,
            l2=args.l2,
        )
        res = run_eval_ml(_manifest(args), args.features, args.thresholds, args.out, cfg, args.trials)
        for enc in ("numerical", "onehot"):
            print(f"{enc:<10} weighted F1 {100 * res[enc]['weighted_f1']:7.3f}  "
                  f"macro F1 {100 * res[enc]['macro_f1']:7.3f}")
        print(f"{'random':<10} weighted F1 {100 * res['random_weighted_f1']:7.3f}")
    elif c == "score":
        report = run_score(_manifest(args, "gold"), args.pred, args.out)
        print(metrics.format_report(report))
        if args.baseline:
            before = metrics.EvalReport.from_dict(read_document(args.baseline, REPORT))
            delta = metrics.diff_reports(before, report).formatted()
            print("\nchange vs baseline")
            for key, val in delta.items():
                print(f"  {key:<14} {val}")


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subs = build_parser()
    try:
        _apply_config(argv, subs)
    except (SpeechCueError, json.JSONDecodeError) as exc:
        print(f"speechcue: error: {exc}", file=sys.stderr)
        return 2
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    missing = [d for d in subs[args.command]._speechcue_required if getattr(args, d) is None]
    if missing:
        flags = ", ".join("--" + d.replace("_", "-") for d in missing)
        print(f"speechcue {args.command}: error: missing required {flags}", file=sys.stderr)
        return 2
    try:
        dispatch(args)
    except (SpeechCueError, ValueError) as exc:
        print(f"speechcue {args.command}: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
