"""Rebuild the prompt and fine-tune golden files from the bundled corpus.

Only run this after a deliberate change to prompt wording or annotation
rendering, and review the resulting diff before committing it.
"""

from __future__ import annotations

import shutil
import tempfile
from pathlib import Path

from speechcue.pipeline import run_pipeline
from speechcue.prompt import MODES

ROOT = Path(__file__).resolve().parents[1]
GOLDEN = ROOT / "tests" / "golden"


def main() -> None:
    GOLDEN.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        out = run_pipeline(ROOT / "data" / "synthetic", tmp)
        names = [f"prompts_{mode}" for mode in MODES] + ["finetune"]
        for name in names:
            dest = GOLDEN / out[name].name
            shutil.copyfile(out[name], dest)
            print(f"wrote {dest.relative_to(ROOT)}")


if __name__ == "__main__":
    main()
