"""Run every stage over a corpus directory and print where each artifact landed.

Classification and scoring only run when --base-url and --model are given;
the bearer key is read from SPEECHCUE_API_KEY.
"""

from __future__ import annotations

import argparse
import json
from pathlib import Path

from speechcue.inference import EndpointConfig
from speechcue.pipeline import PipelineConfig, run_pipeline

ROOT = Path(__file__).resolve().parents[1]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--corpus", default=str(ROOT / "data" / "synthetic"))
    ap.add_argument("--out", default="runs/synthetic")
    ap.add_argument("--classes", type=int, default=5)
    ap.add_argument("--grouping", default="per_speaker", choices=("global", "per_speaker", "per_group"))
    ap.add_argument("--min-count", type=int, default=24)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--base-url")
    ap.add_argument("--model")
    ap.add_argument("--mode", default="with_description")
    args = ap.parse_args()

    endpoint = EndpointConfig(args.base_url, args.model) if args.base_url and args.model else None
    cfg = PipelineConfig(
        num_classes=args.classes,
        grouping=args.grouping,
        min_count=args.min_count,
        seed=args.seed,
        endpoint=endpoint,
        classify_mode=args.mode,
    )
    out = run_pipeline(args.corpus, args.out, cfg)
    for name, path in out.items():
        print(f"{name:<28} {path}")
    ml = json.loads(out["eval_ml"].read_text())
    print(f"\neval-ml on {ml['test_size']} test utterances: "
          f"numerical {100 * ml['numerical']['weighted_f1']:.2f}, "
          f"onehot {100 * ml['onehot']['weighted_f1']:.2f}, "
          f"random {100 * ml['random_weighted_f1']:.2f}")


if __name__ == "__main__":
    main()
