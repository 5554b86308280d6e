"""Run every stage over one corpus directory, writing the intermediates to a work directory."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from speechcue import baseline, cli
from speechcue.corpus import load_manifest, resolve_label_set
from speechcue.inference import EndpointConfig
from speechcue.prompt import MODES, PromptConfig


@dataclass(frozen=True)
class PipelineConfig:
    labels: str | None = "iemocap"
    num_classes: int = 5
    grouping: str = "per_speaker"
    min_count: int = 24
    standardize: str | None = None
    hedge_margin: float = 0.05
    context_window: int = 12
    context_feature: str = "pitch"
    context_depth: int = 3
    seed: int = 0
    jobs: int = 1
    trials: int = 10_000
    # classify only runs when an endpoint is given
    endpoint: EndpointConfig | None = field(default=None, compare=False)
    classify_mode: str = "with_description"


def run_pipeline(corpus_dir: str | Path, workdir: str | Path, config: PipelineConfig | None = None) -> dict[str, Path]:
    """Extract, threshold, describe, prompt (all modes), export, eval-ml, then classify and score.

    Returns a map from artifact name to its path under ``workdir``.
    """
    cfg = config or PipelineConfig()
    corpus_dir, work = Path(corpus_dir), Path(workdir)
    work.mkdir(parents=True, exist_ok=True)
    manifest_path = corpus_dir / "manifest.jsonl"
    manifest = load_manifest(manifest_path, resolve_label_set(cfg.labels))
    out = {
        "features": work / "features.jsonl",
        "thresholds": work / "thresholds.json",
        "annotations": work / "annotations.jsonl",
    }
    cli.run_extract(manifest, corpus_dir, out["features"], jobs=cfg.jobs)
    cli.run_thresholds(
        manifest, out["features"], out["thresholds"], cfg.num_classes, cfg.grouping, cfg.min_count, cfg.standardize
    )
    cli.run_describe(manifest, out["features"], out["thresholds"], out["annotations"], cfg.hedge_margin)
    for mode in MODES:
        out[f"prompts_{mode}"] = work / f"prompts_{mode}.jsonl"
        prompt_cfg = PromptConfig(
            mode=mode,
            context_window=cfg.context_window,
            context_feature=cfg.context_feature,
            context_depth=cfg.context_depth,
        )
        cli.run_prompt(manifest, out["annotations"], out[f"prompts_{mode}"], prompt_cfg)
    out["finetune"] = work / "finetune_with_description.jsonl"
    cli.run_export(out["prompts_with_description"], out["finetune"])
    out["eval_ml"] = work / "eval_ml.json"
    cli.run_eval_ml(
        manifest, out["features"], out["thresholds"], out["eval_ml"], baseline.TrainConfig(seed=cfg.seed), cfg.trials
    )
    if cfg.endpoint is not None:
        out["predictions"] = work / "predictions.jsonl"
        out["report"] = work / "report.json"
        cli.run_classify(manifest, out[f"prompts_{cfg.classify_mode}"], out["predictions"], cfg.endpoint)
        cli.run_score(manifest, out["predictions"], out["report"])
    return out
